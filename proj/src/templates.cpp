#include "magic/templates.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace magic {

std::string render_template(const std::string& text,
                            const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(text.size());
    size_t i = 0;
    while (i < text.size()) {
        if (text[i] == '{') {
            size_t close = text.find('}', i);
            if (close != std::string::npos) {
                std::string name = text.substr(i + 1, close - i - 1);
                auto it = values.find(name);
                if (it != values.end()) {
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out += text[i];
        ++i;
    }
    return out;
}

TemplateSet TemplateSet::load(const std::string& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw Error(Errc::MissingField, "cannot open template manifest " + manifest_path);
    json doc = json::parse(in);
    if (doc.value("schema", "") != "magic-templates/1")
        throw Error(Errc::InvalidField, "expected schema magic-templates/1");

    const std::filesystem::path base = std::filesystem::path(manifest_path).parent_path();
    TemplateSet set;
    for (const json& entry : doc.at("entries")) {
        const std::string key = entry.at("scenario").get<std::string>() + "/" +
                                entry.at("role").get<std::string>() + "/" +
                                entry.at("stage").get<std::string>();
        const std::filesystem::path file = base / entry.at("file").get<std::string>();
        std::ifstream tf(file);
        if (!tf) throw Error(Errc::MissingField, "cannot open template " + file.string());
        std::ostringstream text;
        text << tf.rdbuf();
        std::string body = text.str();
        while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) body.pop_back();
        set.texts_[key] = std::move(body);
    }
    return set;
}

bool TemplateSet::has(const std::string& scenario, const std::string& role,
                      const std::string& stage) const {
    return texts_.contains(scenario + "/" + role + "/" + stage) ||
           texts_.contains(scenario + "/any/" + stage) || texts_.contains("any/any/" + stage);
}

const std::string& TemplateSet::get(const std::string& scenario, const std::string& role,
                                    const std::string& stage) const {
    for (const std::string& key :
         {scenario + "/" + role + "/" + stage, scenario + "/any/" + stage, "any/any/" + stage}) {
        auto it = texts_.find(key);
        if (it != texts_.end()) return it->second;
    }
    throw Error(Errc::MissingField, "no template for " + scenario + "/" + role + "/" + stage);
}

std::string TemplateSet::render(const std::string& scenario, const std::string& role,
                                const std::string& stage,
                                const std::map<std::string, std::string>& values) const {
    return render_template(get(scenario, role, stage), values);
}

} // namespace magic
