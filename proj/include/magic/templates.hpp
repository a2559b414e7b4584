#pragma once

#include <map>
#include <string>

#include "magic/core.hpp"

namespace magic {

// Substitutes {name} placeholders. Unknown placeholders are left intact so
// that format-example braces inside prompts survive.
std::string render_template(const std::string& text,
                            const std::map<std::string, std::string>& values);

// Prompt templates live in asset files keyed by (scenario, role, stage);
// "any" is the wildcard for role- or scenario-independent entries. The
// manifest maps keys to file paths relative to its own directory.
class TemplateSet {
public:
    static TemplateSet load(const std::string& manifest_path);

    // Exact (scenario, role, stage) lookup with fallback to role "any",
    // then scenario "any". Throws MissingField when nothing matches.
    const std::string& get(const std::string& scenario, const std::string& role,
                           const std::string& stage) const;

    std::string render(const std::string& scenario, const std::string& role,
                       const std::string& stage,
                       const std::map<std::string, std::string>& values) const;

    bool has(const std::string& scenario, const std::string& role, const std::string& stage) const;

private:
    std::map<std::string, std::string> texts_; // key: scenario/role/stage
};

} // namespace magic
