#include "u2f/prompts.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "u2f/text.hpp"

namespace u2f {

// Generated from prompts/*.txt at configure time.
const std::map<std::string, std::string>& embedded_prompts();

PromptLibrary::PromptLibrary() : templates_(embedded_prompts()) {}

void PromptLibrary::set(const std::string& name, std::string content) { templates_[name] = std::move(content); }

void PromptLibrary::override_from_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) fail(ErrorCode::IoError, "prompt directory not found: " + dir);
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
        std::ifstream in(entry.path());
        std::stringstream buf;
        buf << in.rdbuf();
        templates_[entry.path().stem().string()] = buf.str();
    }
}

const std::string& PromptLibrary::text(const std::string& name) const {
    auto it = templates_.find(name);
    if (it == templates_.end()) fail(ErrorCode::MissingField, "prompt template '" + name + "'");
    return it->second;
}

std::vector<std::string> PromptLibrary::names() const {
    std::vector<std::string> out;
    for (const auto& [k, _] : templates_) out.push_back(k);
    return out;
}

const PromptLibrary& PromptLibrary::defaults() {
    static const PromptLibrary lib;
    return lib;
}

std::string substitute(std::string_view tmpl, const std::map<std::string, std::string>& vars) {
    std::string out;
    out.reserve(tmpl.size());
    for (std::size_t i = 0; i < tmpl.size(); ++i) {
        const char c = tmpl[i];
        if (c == '{') {
            if (i + 1 < tmpl.size() && tmpl[i + 1] == '{') {
                out.push_back('{');
                ++i;
                continue;
            }
            const auto close = tmpl.find('}', i);
            if (close == std::string_view::npos) fail(ErrorCode::InvalidValue, "unterminated placeholder in template");
            const std::string key(tmpl.substr(i + 1, close - i - 1));
            auto it = vars.find(key);
            if (it == vars.end()) fail(ErrorCode::MissingField, "template placeholder {" + key + "} has no value");
            out += it->second;
            i = close;
            continue;
        }
        if (c == '}' && i + 1 < tmpl.size() && tmpl[i + 1] == '}') {
            out.push_back('}');
            ++i;
            continue;
        }
        out.push_back(c);
    }
    return out;
}

RenderedPrompt PromptLibrary::render(const std::string& name, const std::map<std::string, std::string>& vars,
                                     const std::string& constraints) const {
    const std::string& raw = text(name);
    const auto sys_pos = raw.find("[system]");
    const auto user_pos = raw.find("[user]");
    if (sys_pos == std::string::npos || user_pos == std::string::npos || user_pos < sys_pos) {
        fail(ErrorCode::InvalidValue, "prompt template '" + name + "' lacks [system]/[user] sections");
    }
    const auto sys_body = raw.substr(sys_pos + 8, user_pos - sys_pos - 8);
    const auto user_body = raw.substr(user_pos + 6);
    RenderedPrompt p;
    p.system = text::trim(substitute(sys_body, vars));
    p.user = text::trim(substitute(user_body, vars));
    if (!constraints.empty()) p.system += "\n\n" + text::trim(constraints);
    return p;
}

} // namespace u2f
