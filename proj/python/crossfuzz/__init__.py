"""Cross-library differential fuzzing for deep learning APIs."""

import json

from . import _core
from ._core import count_similarity, levenshtein, name_similarity, normalize_api_name

__all__ = [
    "levenshtein",
    "name_similarity",
    "normalize_api_name",
    "count_similarity",
    "type_similarity",
    "match",
    "reference_call",
    "compute_variance",
    "normalize_value",
    "fuzz_group",
]


def type_similarity(a, b):
    return _core.type_similarity(list(a), list(b))


def match(corpora, reference="", aliases=""):
    report = _core.match([str(p) for p in corpora], reference, str(aliases) if aliases else "")
    return [json.loads(line) for line in report.splitlines() if line]


def reference_call(variant, api, args):
    return json.loads(_core.reference_call(variant, api, json.dumps(args)))


def compute_variance(outcomes):
    return json.loads(_core.compute_variance(json.dumps(outcomes)))


def normalize_value(value):
    return json.loads(_core.normalize_value(json.dumps(value)))


def fuzz_group(groups, group_id, backends, config=""):
    return json.loads(_core.fuzz_group(str(groups), group_id, list(backends), config))
