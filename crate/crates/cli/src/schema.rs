/// JSON Schema for the per-metric result files written by `assess`.
pub const RESULT_SCHEMA: &str = r##"{
  "$schema": "https://json-schema.org/draft/2020-12/schema",
  "title": "QualityResult",
  "type": "object",
  "required": ["metric_id", "score", "explanation", "recommendations", "details", "dataset_fingerprint", "timestamp"],
  "additionalProperties": false,
  "properties": {
    "metric_id": {
      "enum": [
        "class_overlap", "label_purity", "class_parity", "feature_relevance", "data_homogeneity",
        "data_fairness", "feature_correlation", "data_completeness", "outlier_detection", "data_duplicates"
      ]
    },
    "score": { "type": "number", "minimum": 0, "maximum": 1 },
    "explanation": { "type": "string" },
    "recommendations": {
      "type": "array",
      "items": {
        "type": "object",
        "required": ["action_text", "remediation_op_id", "parameter_hints"],
        "additionalProperties": false,
        "properties": {
          "action_text": { "type": "string" },
          "remediation_op_id": {
            "enum": [
              null, "correct_labels", "resample", "drop_features", "apply_transform", "repair_features",
              "drop_correlated", "impute_missing", "remove_outliers", "remove_duplicates"
            ]
          },
          "parameter_hints": {}
        }
      }
    },
    "details": { "type": "object" },
    "dataset_fingerprint": { "type": "string", "pattern": "^[0-9a-f]{64}$" },
    "timestamp": { "type": "string", "format": "date-time" }
  }
}
"##;
