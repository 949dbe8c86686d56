#include "u2f/structured.hpp"

#include <cstdlib>
#include <regex>
#include <sstream>

#include "u2f/text.hpp"

namespace u2f {

FieldSpec FieldSpec::text(std::string name, bool required, std::string hint) {
    FieldSpec f;
    f.name = std::move(name);
    f.type = FieldType::Text;
    f.required = required;
    f.hint = std::move(hint);
    return f;
}

FieldSpec FieldSpec::integer(std::string name, long lo, long hi, bool required) {
    FieldSpec f;
    f.name = std::move(name);
    f.type = FieldType::Integer;
    f.min = static_cast<double>(lo);
    f.max = static_cast<double>(hi);
    f.required = required;
    return f;
}

FieldSpec FieldSpec::real(std::string name, double lo, double hi, bool required) {
    FieldSpec f;
    f.name = std::move(name);
    f.type = FieldType::Real;
    f.min = lo;
    f.max = hi;
    f.required = required;
    return f;
}

FieldSpec FieldSpec::enumeration(std::string name, std::vector<std::string> values, bool required) {
    FieldSpec f;
    f.name = std::move(name);
    f.type = FieldType::Enum;
    f.values = std::move(values);
    f.required = required;
    return f;
}

FieldSpec FieldSpec::list(std::string name, std::size_t min_items, bool required) {
    FieldSpec f;
    f.name = std::move(name);
    f.type = FieldType::List;
    f.min_items = min_items;
    f.required = required;
    return f;
}

FieldSpec FieldSpec::records(std::string name, std::vector<FieldSpec> columns, std::size_t min_items, bool required) {
    FieldSpec f;
    f.name = std::move(name);
    f.type = FieldType::Records;
    f.subfields = std::move(columns);
    f.min_items = min_items;
    f.required = required;
    return f;
}

FieldSpec FieldSpec::flag(std::string name, std::string hint) {
    FieldSpec f;
    f.name = std::move(name);
    f.type = FieldType::Flag;
    f.required = false;
    f.hint = std::move(hint);
    return f;
}

namespace {

std::string describe_scalar(const FieldSpec& f) {
    switch (f.type) {
    case FieldType::Text: return f.hint.empty() ? "text" : f.hint;
    case FieldType::Integer:
        return "integer " + std::to_string(static_cast<long>(f.min)) + "-" + std::to_string(static_cast<long>(f.max));
    case FieldType::Real: {
        std::ostringstream os;
        os << "number " << f.min << "-" << f.max;
        return os.str();
    }
    case FieldType::Enum: return "one of " + text::join(f.values, "|");
    case FieldType::List: return "comma separated";
    default: return "text";
    }
}

bool numeric_bounded(const FieldSpec& f) { return !(f.min == 0.0 && f.max == 0.0); }

/// Converts one scalar body into JSON per the spec, or returns a problem.
std::optional<Json> convert_scalar(const FieldSpec& f, const std::string& raw, std::string& problem) {
    const std::string body = text::trim(raw);
    switch (f.type) {
    case FieldType::Text:
        if (body.empty()) {
            problem = "field '" + f.name + "' is empty";
            return std::nullopt;
        }
        return Json(body);
    case FieldType::Integer: {
        char* end = nullptr;
        const long v = std::strtol(body.c_str(), &end, 10);
        if (body.empty() || end == nullptr || *end != '\0') {
            problem = "field '" + f.name + "' is not an integer: '" + body + "'";
            return std::nullopt;
        }
        if (numeric_bounded(f) && (v < f.min || v > f.max)) {
            problem = "field '" + f.name + "' out of range: " + body;
            return std::nullopt;
        }
        return Json(v);
    }
    case FieldType::Real: {
        char* end = nullptr;
        const double v = std::strtod(body.c_str(), &end);
        if (body.empty() || end == nullptr || *end != '\0') {
            problem = "field '" + f.name + "' is not a number: '" + body + "'";
            return std::nullopt;
        }
        if (numeric_bounded(f) && (v < f.min || v > f.max)) {
            problem = "field '" + f.name + "' out of range: " + body;
            return std::nullopt;
        }
        return Json(v);
    }
    case FieldType::Enum: {
        for (const auto& label : f.values) {
            if (text::to_lower(label) == text::to_lower(body)) return Json(label);
        }
        problem = "field '" + f.name + "' has unknown label '" + body + "'";
        return std::nullopt;
    }
    case FieldType::List: {
        Json arr = Json::array();
        std::string item;
        std::istringstream in(body);
        while (std::getline(in, item, ',')) {
            auto t = text::trim(item);
            if (!t.empty()) arr.push_back(t);
        }
        return arr;
    }
    default: problem = "unsupported scalar type for '" + f.name + "'"; return std::nullopt;
    }
}

std::vector<std::string> list_items(const std::string& body) {
    std::vector<std::string> items;
    std::istringstream in(body);
    std::string line;
    while (std::getline(in, line)) {
        auto t = text::trim(line);
        if (t.size() >= 1 && (t[0] == '-' || t[0] == '*')) {
            items.push_back(text::trim(std::string_view(t).substr(1)));
        }
    }
    return items;
}

} // namespace

std::string FieldSchema::format_block() const {
    std::ostringstream os;
    os << "Respond using exactly these labeled sections, each introduced by a line of the form"
          " \"=== name ===\":\n";
    for (const auto& f : fields) {
        os << "=== " << f.name << " ===";
        switch (f.type) {
        case FieldType::List: os << "  (one item per line, starting with \"- \")"; break;
        case FieldType::Records: {
            os << "  (one item per line: \"- ";
            for (std::size_t i = 0; i < f.subfields.size(); ++i) {
                if (i) os << " | ";
                os << f.subfields[i].name << ": <" << describe_scalar(f.subfields[i]) << ">";
            }
            os << "\")";
            break;
        }
        case FieldType::Flag: os << "  (include only if " << (f.hint.empty() ? "applicable" : f.hint) << ")"; break;
        default: os << "  (" << describe_scalar(f) << ")"; break;
        }
        if (!f.required && f.type != FieldType::Flag) os << " [optional]";
        os << '\n';
    }
    return os.str();
}

std::map<std::string, std::string> split_sections(std::string_view input) {
    static const std::regex kHeader(R"(^\s*===\s*([A-Za-z_][A-Za-z0-9_]*)\s*===\s*$)");
    std::map<std::string, std::string> out;
    std::istringstream in{std::string(input)};
    std::string line;
    std::string current;
    std::string body;
    bool open = false;
    auto flush = [&] {
        if (open) out[current] = text::trim(body);
    };
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::smatch m;
        if (std::regex_match(line, m, kHeader)) {
            flush();
            current = text::to_lower(m[1].str());
            body.clear();
            open = true;
            continue;
        }
        if (open) {
            body += line;
            body += '\n';
        }
    }
    flush();
    return out;
}

ParseOutcome parse_structured(std::string_view input, const FieldSchema& schema) {
    const auto sections = split_sections(input);
    Json record = Json::object();
    for (const auto& f : schema.fields) {
        auto it = sections.find(text::to_lower(f.name));
        if (f.type == FieldType::Flag) {
            if (it != sections.end()) record[f.name] = true;
            continue;
        }
        if (it == sections.end()) {
            if (f.required) return {std::nullopt, "missing section '" + f.name + "'"};
            continue;
        }
        std::string problem;
        if (f.type == FieldType::List) {
            auto items = list_items(it->second);
            if (items.size() < f.min_items) {
                return {std::nullopt, "section '" + f.name + "' needs at least " + std::to_string(f.min_items) + " items"};
            }
            record[f.name] = items;
            continue;
        }
        if (f.type == FieldType::Records) {
            Json arr = Json::array();
            for (const auto& item : list_items(it->second)) {
                std::map<std::string, std::string> cells;
                std::istringstream parts(item);
                std::string part;
                while (std::getline(parts, part, '|')) {
                    const auto colon = part.find(':');
                    if (colon == std::string::npos) continue;
                    cells[text::to_lower(text::trim(part.substr(0, colon)))] = text::trim(part.substr(colon + 1));
                }
                Json row = Json::object();
                for (const auto& col : f.subfields) {
                    auto c = cells.find(text::to_lower(col.name));
                    if (c == cells.end() || text::trim(c->second).empty()) {
                        if (col.required) {
                            return {std::nullopt, "item in '" + f.name + "' lacks '" + col.name + "': " + item};
                        }
                        continue;
                    }
                    auto v = convert_scalar(col, c->second, problem);
                    if (!v) return {std::nullopt, problem + " (in '" + f.name + "')"};
                    row[col.name] = *v;
                }
                arr.push_back(std::move(row));
            }
            if (arr.size() < f.min_items) {
                return {std::nullopt, "section '" + f.name + "' needs at least " + std::to_string(f.min_items) + " items"};
            }
            record[f.name] = std::move(arr);
            continue;
        }
        auto v = convert_scalar(f, it->second, problem);
        if (!v) {
            if (!f.required && text::trim(it->second).empty()) continue;
            return {std::nullopt, problem};
        }
        record[f.name] = *v;
    }
    return {record, {}};
}

} // namespace u2f
