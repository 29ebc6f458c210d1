#pragma once

// CLI11 config formatter for JSON files of the form
//   {"<subcommand>": {"<long-option-name>": value, ...}}
// A section selects its subcommand, so a resolved config file replays a run
// on its own. Numbers and booleans are accepted as well as strings; arrays
// feed multi-value options.

#include <istream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

namespace riskctl::cli {

inline std::string json_scalar_input(const nlohmann::json& v, const std::string& key) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number()) return v.dump();
    throw CLI::ConversionError("config key '" + key + "' must be a string, number or boolean");
}

// Every configurable long option of subcommand `app` with its effective
// value: what was given on the command line or in a config file, else the
// default.
inline nlohmann::json resolved_config(const CLI::App& app) {
    nlohmann::json j = nlohmann::json::object();
    for (const CLI::Option* opt : app.get_options()) {
        if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
        const std::string& name = opt->get_lnames().front();
        if (name == "help" || name == "config") continue;
        if (opt->get_type_size() == 0) {
            j[name] = opt->count() > 0;
        } else if (opt->count() > 0) {
            const auto& res = opt->results();
            j[name] = res.size() == 1 ? nlohmann::json(res.front()) : nlohmann::json(res);
        } else if (!opt->get_default_str().empty()) {
            j[name] = opt->get_default_str();
        }
    }
    return nlohmann::json{{app.get_name(), j}};
}

class JsonConfig : public CLI::Config {
  public:
    std::string to_config(const CLI::App* app, bool, bool, std::string) const override {
        return resolved_config(*app).dump(2);
    }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        nlohmann::json j;
        try {
            input >> j;
        } catch (const nlohmann::json::exception& e) {
            throw CLI::ConversionError(std::string("config is not valid JSON: ") + e.what());
        }
        if (!j.is_object()) throw CLI::ConversionError("config must be a JSON object");
        std::vector<CLI::ConfigItem> items;
        for (auto sec = j.begin(); sec != j.end(); ++sec) {
            if (!sec->is_object())
                throw CLI::ConversionError("config key '" + sec.key() + "' must hold an object of options");
            const std::vector<std::string> parents{sec.key()};
            items.push_back({parents, "++", {}});
            for (auto it = sec->begin(); it != sec->end(); ++it) {
                if (it->is_null()) continue;
                CLI::ConfigItem item;
                item.parents = parents;
                item.name = it.key();
                if (it->is_array()) {
                    for (const auto& v : *it) item.inputs.push_back(json_scalar_input(v, it.key()));
                } else {
                    item.inputs.push_back(json_scalar_input(*it, it.key()));
                }
                items.push_back(std::move(item));
            }
            items.push_back({parents, "--", {}});
        }
        return items;
    }
};

}  // namespace riskctl::cli
