#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace perfsampler {

enum class Errc {
  malformed_json,
  duplicate_or_missing_name,
  missing_documentation,
  invalid_option,
  unknown_option,
  inadmissible_value,
  missing_default,
  invalid_configuration,
  cardinality_over_limit,
  budget_exceeds_space,
  invalid_argument,
  no_script_entry,
  transport_error,
  non_retryable_status,
  empty_completion,
  no_json_found,
  schema_mismatch,
  generation_exhausted,
  non_finite_input,
  factorization_failed,
  dimension_mismatch,
  incomplete_dataset,
  duplicate_row,
  header_mismatch,
  io_error,
  oracle_failure,
};

constexpr std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::malformed_json: return "MalformedJson";
    case Errc::duplicate_or_missing_name: return "DuplicateOrMissingName";
    case Errc::missing_documentation: return "MissingDocumentation";
    case Errc::invalid_option: return "InvalidOption";
    case Errc::unknown_option: return "UnknownOption";
    case Errc::inadmissible_value: return "InadmissibleValue";
    case Errc::missing_default: return "MissingDefault";
    case Errc::invalid_configuration: return "InvalidConfiguration";
    case Errc::cardinality_over_limit: return "CardinalityOverLimit";
    case Errc::budget_exceeds_space: return "BudgetExceedsSpace";
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::no_script_entry: return "NoScriptEntry";
    case Errc::transport_error: return "TransportError";
    case Errc::non_retryable_status: return "NonRetryableStatus";
    case Errc::empty_completion: return "EmptyCompletion";
    case Errc::no_json_found: return "NoJsonFound";
    case Errc::schema_mismatch: return "SchemaMismatch";
    case Errc::generation_exhausted: return "GenerationExhausted";
    case Errc::non_finite_input: return "NonFiniteInput";
    case Errc::factorization_failed: return "FactorizationFailed";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::incomplete_dataset: return "IncompleteDataset";
    case Errc::duplicate_row: return "DuplicateRow";
    case Errc::header_mismatch: return "HeaderMismatch";
    case Errc::io_error: return "IoError";
    case Errc::oracle_failure: return "OracleFailure";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so that
/// callers (and the CLI exit-code mapping) can branch without parsing text.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace perfsampler
