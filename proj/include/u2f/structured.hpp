#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "u2f/domain.hpp"

/// Labeled-section structured output.
///
/// Agents ask the model to answer with sections of the form
///
///     === field_name ===
///     body text
///
/// which any chat provider can produce without function calling. A
/// FieldSchema turns the sections into a typed JSON record or reports why the
/// text does not conform.
namespace u2f {

enum class FieldType {
    Text,
    Integer,
    Real,
    Enum,
    /// Lines starting with "-" or "*".
    List,
    /// List items of the form "key: value | key: value".
    Records,
    /// Section presence alone; the body is ignored.
    Flag,
};

struct FieldSpec {
    std::string name;
    FieldType type = FieldType::Text;
    bool required = true;
    double min = 0.0;  ///< numeric lower bound (Integer/Real)
    double max = 0.0;  ///< numeric upper bound; ignored when min == max == 0
    std::vector<std::string> values;  ///< canonical Enum labels
    std::vector<FieldSpec> subfields;  ///< Records columns
    std::size_t min_items = 0;  ///< List/Records
    std::string hint;  ///< shown to the model in the format block

    static FieldSpec text(std::string name, bool required = true, std::string hint = {});
    static FieldSpec integer(std::string name, long lo, long hi, bool required = true);
    static FieldSpec real(std::string name, double lo, double hi, bool required = true);
    static FieldSpec enumeration(std::string name, std::vector<std::string> values, bool required = true);
    static FieldSpec list(std::string name, std::size_t min_items = 0, bool required = true);
    static FieldSpec records(std::string name, std::vector<FieldSpec> columns, std::size_t min_items = 0,
                             bool required = true);
    static FieldSpec flag(std::string name, std::string hint = {});
};

struct FieldSchema {
    std::vector<FieldSpec> fields;

    /// Instructions appended to the user prompt describing the sections.
    [[nodiscard]] std::string format_block() const;
};

/// Raw "=== name ===" sections in order of appearance; later duplicates win.
std::map<std::string, std::string> split_sections(std::string_view text);

struct ParseOutcome {
    std::optional<Json> record;
    std::string problem;  ///< why parsing failed; empty on success
};

ParseOutcome parse_structured(std::string_view text, const FieldSchema& schema);

} // namespace u2f
