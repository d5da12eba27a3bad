#pragma once

// Material definitions from a JSON data file:
//
// {
//   "materials": [
//     {
//       "name": "BBO",
//       "reference": "...",                 (optional)
//       "validity_nm": [200, 2600],
//       "ordinary":      { "A": 2.7359, "terms": [ {"kind": "pole", "B": 0.01878, "C": 0.01822},
//                                                  {"kind": "power", "B": -0.01354, "C": 2} ] },
//       "extraordinary": { "A": 2.3753, "terms": [ ... ] }
//     }
//   ]
// }
//
// n^2 = A + sum(terms), lambda in um; term kinds:
//   pole       B / (lambda^2 - C)
//   resonance  B lambda^2 / (lambda^2 - C)
//   power      B lambda^C

#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "spdcmap/crystal.hpp"
#include "spdcmap/error.hpp"

namespace spdcmap {

namespace detail {

inline SellmeierTerm::Kind parse_term_kind(const std::string& s, const std::string& where) {
    if (s == "pole") return SellmeierTerm::Kind::pole;
    if (s == "resonance") return SellmeierTerm::Kind::resonance;
    if (s == "power") return SellmeierTerm::Kind::power;
    throw ConfigError(where, "unknown Sellmeier term kind '" + s + "'");
}

inline Sellmeier parse_sellmeier(const nlohmann::json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("A") || !j["A"].is_number())
        throw ConfigError(where + ".A", "Sellmeier set needs a numeric constant A");
    Sellmeier s;
    s.A = j["A"].get<double>();
    if (j.contains("terms")) {
        if (!j["terms"].is_array()) throw ConfigError(where + ".terms", "expected an array");
        std::size_t k = 0;
        for (const auto& t : j["terms"]) {
            const std::string tw = where + ".terms[" + std::to_string(k++) + "]";
            if (!t.is_object() || !t.contains("kind") || !t.contains("B") || !t.contains("C") ||
                !t["kind"].is_string() || !t["B"].is_number() || !t["C"].is_number())
                throw ConfigError(tw, "term needs string 'kind' and numeric 'B', 'C'");
            s.terms.push_back({parse_term_kind(t["kind"].get<std::string>(), tw + ".kind"), t["B"].get<double>(),
                               t["C"].get<double>()});
        }
    }
    return s;
}

}  // namespace detail

inline std::vector<Material> parse_materials(const nlohmann::json& doc) {
    if (!doc.is_object() || !doc.contains("materials") || !doc["materials"].is_array())
        throw ConfigError("materials", "expected an array of material definitions");
    std::vector<Material> out;
    std::size_t k = 0;
    for (const auto& m : doc["materials"]) {
        const std::string where = "materials[" + std::to_string(k++) + "]";
        if (!m.contains("name") || !m["name"].is_string()) throw ConfigError(where + ".name", "missing material name");
        const auto& v = m.value("validity_nm", nlohmann::json());
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
            throw ConfigError(where + ".validity_nm", "expected [min_nm, max_nm]");
        if (!m.contains("ordinary") || !m.contains("extraordinary"))
            throw ConfigError(where, "needs 'ordinary' and 'extraordinary' Sellmeier sets");
        try {
            out.emplace_back(m["name"].get<std::string>(), detail::parse_sellmeier(m["ordinary"], where + ".ordinary"),
                             detail::parse_sellmeier(m["extraordinary"], where + ".extraordinary"),
                             WavelengthRange{v[0].get<double>(), v[1].get<double>()},
                             m.value("reference", std::string{}));
        } catch (const ValidationError& e) {
            throw ConfigError(where, e.what());
        }
    }
    return out;
}

inline void load_materials_file(const std::string& path, MaterialRegistry& registry) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open materials file '" + path + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("materials_file", std::string("invalid JSON: ") + e.what());
    }
    for (auto& m : parse_materials(doc)) registry.add(m);
}

}  // namespace spdcmap
