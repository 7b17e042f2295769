"""JSON Schemas for every document the workbench reads or writes.

These are plain draft-07 schema dicts; the package itself validates inputs
structurally during construction, so the schemas exist for interchange with
other tools and are exercised by the test suite.
"""

from __future__ import annotations


def _number_array() -> dict:
    return {"type": "array", "items": {"type": "number"}}


CHANNEL_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": [
        "kind", "mode", "M", "K", "input_sizes", "output_sizes",
        "relay_size", "link_capacities", "kernel",
    ],
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": ["pmarc", "marc", "pifrc", "multicast"]},
        "mode": {"enum": ["multicast", "unicast"]},
        "M": {"type": "integer", "minimum": 1},
        "K": {"type": "integer", "minimum": 1},
        "input_sizes": {"type": "array", "items": {"type": "integer", "minimum": 1}},
        "output_sizes": {"type": "array", "items": {"type": "integer", "minimum": 1}},
        "relay_size": {"type": "integer", "minimum": 1},
        "link_capacities": {
            "type": "array",
            "items": {"type": "number", "minimum": 0},
        },
        "kernel": {
            "type": "array",
            "items": {"type": "number", "minimum": 0, "maximum": 1},
        },
    },
}

POLICY_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": [
        "q_size", "q_dist", "input_sizes", "input_dists",
        "relay_size", "compression_sizes", "compression_dists",
    ],
    "additionalProperties": False,
    "properties": {
        "q_size": {"type": "integer", "minimum": 1},
        "q_dist": _number_array(),
        "input_sizes": {"type": "array", "items": {"type": "integer", "minimum": 1}},
        "input_dists": {"type": "array", "items": _number_array()},
        "relay_size": {"type": "integer", "minimum": 1},
        "compression_sizes": {
            "type": "array",
            "items": {"type": "integer", "minimum": 1},
        },
        "compression_dists": {"type": "array", "items": _number_array()},
    },
}

_BOUND_SCHEMA = {
    "type": "object",
    "required": ["name", "value_bits", "raw_bits", "clamped"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "value_bits": {"type": "number", "minimum": 0},
        "raw_bits": {"type": "number"},
        "clamped": {"type": "boolean"},
    },
}

REGION_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": ["num_sources", "scheme", "claim", "empty", "classes"],
    "additionalProperties": False,
    "properties": {
        "num_sources": {"type": "integer", "minimum": 1},
        "scheme": {"enum": ["gcf", "cf", "nnc"]},
        "claim": {"type": "string"},
        "empty": {"type": "boolean"},
        "classes": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["label", "members", "bounds", "effective_bits"],
                "additionalProperties": False,
                "properties": {
                    "label": {"type": "string"},
                    "members": {
                        "type": "array",
                        "items": {"type": "integer", "minimum": 1},
                        "minItems": 1,
                    },
                    "bounds": {"type": "array", "items": _BOUND_SCHEMA, "minItems": 1},
                    "effective_bits": {"type": "number", "minimum": 0},
                },
            },
        },
    },
}

COMPARE_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": ["schemes", "regions", "pairwise"],
    "additionalProperties": False,
    "properties": {
        "schemes": {"type": "array", "items": {"type": "string"}},
        "regions": {"type": "object", "additionalProperties": REGION_SCHEMA},
        "pairwise": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["a", "b", "verdict", "witness", "max_gap_bits"],
                "additionalProperties": False,
                "properties": {
                    "a": {"type": "string"},
                    "b": {"type": "string"},
                    "verdict": {
                        "enum": ["equal", "a_subset_b", "b_subset_a", "incomparable"]
                    },
                    "witness": {"type": ["string", "null"]},
                    "max_gap_bits": {"type": "number"},
                },
            },
        },
    },
}

CONDITION_REPORT_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": [
        "holds", "min_gap", "witnesses", "units", "certified", "search", "note",
    ],
    "additionalProperties": False,
    "properties": {
        "holds": {"type": "boolean"},
        "min_gap": {
            "type": "array",
            "items": {"type": "number"},
            "minItems": 2,
            "maxItems": 2,
        },
        "witnesses": {
            "type": "array",
            "items": {"type": ["object", "null"]},
            "minItems": 2,
            "maxItems": 2,
        },
        "units": {"enum": ["bits", "gain_squared"]},
        "certified": {"enum": ["violation", "evidence_only"]},
        "search": {
            "type": "object",
            "required": ["resolution", "samples", "seed"],
            "additionalProperties": False,
            "properties": {
                "resolution": {"type": ["integer", "null"]},
                "samples": {"type": ["integer", "null"]},
                "seed": {"type": ["integer", "null"]},
            },
        },
        "note": {"type": "string"},
    },
}

EQUIVALENCE_REPORT_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": [
        "powers", "lhs_scalar", "lhs_logdet", "rhs",
        "max_route_gap", "holds", "consistent",
    ],
    "additionalProperties": False,
    "properties": {
        "powers": _number_array(),
        "lhs_scalar": {"type": "array", "items": _number_array()},
        "lhs_logdet": {"type": "array", "items": _number_array()},
        "rhs": {"type": "array", "items": _number_array()},
        "max_route_gap": {"type": "number"},
        "holds": {"type": "boolean"},
        "consistent": {"type": "boolean"},
    },
}

GAUSSIAN_CHECK_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": ["condition", "equivalence"],
    "additionalProperties": False,
    "properties": {
        "condition": {k: v for k, v in CONDITION_REPORT_SCHEMA.items()
                      if k != "$schema"},
        "equivalence": {k: v for k, v in EQUIVALENCE_REPORT_SCHEMA.items()
                        if k != "$schema"},
    },
}

SIM_REPORT_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": [
        "config", "trials", "errors", "event_counts", "error_rate", "ci_half_width",
    ],
    "additionalProperties": False,
    "properties": {
        "config": {
            "type": "object",
            "required": [
                "n", "rates", "compression_rates", "epsilon",
                "trials", "seed", "topology",
            ],
            "additionalProperties": False,
            "properties": {
                "n": {"type": "integer", "minimum": 1},
                "rates": _number_array(),
                "compression_rates": _number_array(),
                "epsilon": {"type": "number", "exclusiveMinimum": 0},
                "trials": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer"},
                "topology": {"enum": ["pmarc", "pifrc"]},
            },
        },
        "trials": {"type": "integer", "minimum": 1},
        "errors": {"type": "integer", "minimum": 0},
        "event_counts": {
            "type": "object",
            "additionalProperties": {"type": "integer", "minimum": 0},
        },
        "error_rate": {"type": "number", "minimum": 0, "maximum": 1},
        "ci_half_width": {"type": "number", "minimum": 0},
    },
}

LEMMA_REPORT_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": ["n", "samples", "seed", "tv_inputs", "tv_outputs", "message_rate"],
    "additionalProperties": False,
    "properties": {
        "n": {"type": "integer", "minimum": 1},
        "samples": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer"},
        "tv_inputs": _number_array(),
        "tv_outputs": _number_array(),
        "message_rate": {"type": "number", "minimum": 0},
    },
}

MANIFEST_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": [
        "tool", "version", "command", "argv", "parameters", "inputs", "outputs",
    ],
    "additionalProperties": False,
    "properties": {
        "tool": {"type": "string"},
        "version": {"type": "string"},
        "command": {"type": "string"},
        "argv": {"type": "array", "items": {"type": "string"}},
        "parameters": {"type": "object"},
        "inputs": {
            "type": "object",
            "additionalProperties": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
        },
        "outputs": {
            "type": "object",
            "additionalProperties": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
        },
    },
}

FRONTIER_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": ["value_bits", "weights", "evaluated", "policy", "region"],
    "additionalProperties": False,
    "properties": {
        "value_bits": {"type": "number"},
        "weights": _number_array(),
        "evaluated": {"type": "integer", "minimum": 1},
        "policy": POLICY_SCHEMA,
        "region": REGION_SCHEMA,
    },
}
