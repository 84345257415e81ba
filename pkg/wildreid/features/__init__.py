"""Keypoint detection, descriptor matching, the feature cache and pair blocking."""
from wildreid.features.blocking import all_pairs, candidate_pairs
from wildreid.features.cache import FeatureCache, feature_cache_key, read_feature_file, write_feature_file
from wildreid.features.extractor import FeatureError, FeatureParams, FeatureSet, extract_features
from wildreid.features.imageio import content_hash, load_image, to_gray
from wildreid.features.matcher import CorrespondenceSet, match_descriptors

__all__ = [
    "all_pairs", "candidate_pairs",
    "FeatureCache", "feature_cache_key", "read_feature_file", "write_feature_file",
    "FeatureError", "FeatureParams", "FeatureSet", "extract_features",
    "content_hash", "load_image", "to_gray",
    "CorrespondenceSet", "match_descriptors",
]
