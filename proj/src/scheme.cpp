#include "lightshift/scheme.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace lightshift {

namespace {

using nlohmann::ordered_json;

std::string ptr(std::string_view a, std::size_t i) {
    std::ostringstream os;
    os << "/" << a << "/" << i;
    return os.str();
}

bool finite_number(const ordered_json& j) {
    return j.is_number() && std::isfinite(j.get<double>());
}

struct Reader {
    std::vector<Diagnostic>& diags;

    void fail(std::string msg, std::string loc) {
        diags.push_back({std::move(msg), std::move(loc), 0});
    }

    void check_keys(const ordered_json& obj, const std::set<std::string>& allowed,
                    const std::string& loc) {
        for (auto it = obj.begin(); it != obj.end(); ++it) {
            if (!allowed.count(it.key()))
                fail("unknown field \"" + it.key() + "\"", loc);
        }
    }

    bool number(const ordered_json& obj, const char* key, const std::string& loc,
                double& out, bool required = true) {
        if (!obj.contains(key)) {
            if (required) fail(std::string("missing field \"") + key + "\"", loc);
            return false;
        }
        if (!finite_number(obj.at(key))) {
            fail(std::string("field \"") + key + "\" must be a finite number", loc);
            return false;
        }
        out = obj.at(key).get<double>();
        return true;
    }

    bool text(const ordered_json& obj, const char* key, const std::string& loc,
              std::string& out) {
        if (!obj.contains(key)) {
            fail(std::string("missing field \"") + key + "\"", loc);
            return false;
        }
        if (!obj.at(key).is_string()) {
            fail(std::string("field \"") + key + "\" must be a string", loc);
            return false;
        }
        out = obj.at(key).get<std::string>();
        return true;
    }
};

} // namespace

int LevelScheme::level_index(std::string_view name) const {
    for (std::size_t i = 0; i < levels.size(); ++i)
        if (levels[i].name == name) return static_cast<int>(i);
    return -1;
}

int LevelScheme::laser_index(std::string_view name) const {
    for (std::size_t i = 0; i < lasers.size(); ++i)
        if (lasers[i].name == name) return static_cast<int>(i);
    return -1;
}

std::vector<int> LevelScheme::transitions_of_laser(int laser) const {
    std::vector<int> out;
    for (std::size_t t = 0; t < transitions.size(); ++t)
        if (laser_index(transitions[t].laser) == laser) out.push_back(static_cast<int>(t));
    return out;
}

ParseResult parse_scheme(std::string_view text) {
    ParseResult result;
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        result.diagnostics.push_back({e.what(), "", e.byte});
        return result;
    }

    Reader r{result.diagnostics};
    if (!doc.is_object()) {
        r.fail("top-level value must be an object", "");
        return result;
    }
    r.check_keys(doc, {"format", "mode", "levels", "lasers", "transitions", "settings"}, "");

    if (!doc.contains("format") || !doc.at("format").is_number_integer() ||
        doc.at("format").get<int>() != 1) {
        r.fail("missing or unsupported \"format\" (expected 1)", "/format");
        return result;
    }

    LevelScheme scheme;
    std::string mode;
    if (r.text(doc, "mode", "/mode", mode)) {
        if (mode == "microscopic") scheme.mode = SchemeMode::microscopic;
        else if (mode == "reduced") scheme.mode = SchemeMode::reduced;
        else r.fail("mode must be \"microscopic\" or \"reduced\"", "/mode");
    }

    for (const char* key : {"levels", "lasers", "transitions"}) {
        if (!doc.contains(key) || !doc.at(key).is_array())
            r.fail(std::string("\"") + key + "\" must be an array", std::string("/") + key);
    }
    if (!doc.contains("settings") || !doc.at("settings").is_object())
        r.fail("\"settings\" must be an object", "/settings");
    if (!result.diagnostics.empty()) return result;

    for (std::size_t i = 0; i < doc["levels"].size(); ++i) {
        const auto& j = doc["levels"][i];
        const std::string loc = ptr("levels", i);
        if (!j.is_object()) { r.fail("level entry must be an object", loc); continue; }
        r.check_keys(j, {"name", "detuning"}, loc);
        LevelSpec lv;
        r.text(j, "name", loc, lv.name);
        r.number(j, "detuning", loc, lv.detuning);
        scheme.levels.push_back(std::move(lv));
    }

    for (std::size_t i = 0; i < doc["lasers"].size(); ++i) {
        const auto& j = doc["lasers"][i];
        const std::string loc = ptr("lasers", i);
        if (!j.is_object()) { r.fail("laser entry must be an object", loc); continue; }
        r.check_keys(j, {"name", "angular_frequency", "wavenumber", "mean_photon_number"}, loc);
        LaserSpec ls;
        r.text(j, "name", loc, ls.name);
        r.number(j, "angular_frequency", loc, ls.angular_frequency);
        r.number(j, "mean_photon_number", loc, ls.mean_photon_number);
        double k = 0.0;
        if (r.number(j, "wavenumber", loc, k, /*required=*/false)) ls.wavenumber = k;
        scheme.lasers.push_back(std::move(ls));
    }

    for (std::size_t i = 0; i < doc["transitions"].size(); ++i) {
        const auto& j = doc["transitions"][i];
        const std::string loc = ptr("transitions", i);
        if (!j.is_object()) { r.fail("transition entry must be an object", loc); continue; }
        r.check_keys(j, {"laser", "lower", "upper", "dipole_moment", "rabi_frequency",
                         "decay_rate"}, loc);
        TransitionSpec tr;
        r.text(j, "laser", loc, tr.laser);
        r.text(j, "lower", loc, tr.lower);
        r.text(j, "upper", loc, tr.upper);
        double v = 0.0;
        if (r.number(j, "dipole_moment", loc, v, false)) tr.dipole_moment = v;
        if (r.number(j, "rabi_frequency", loc, v, false)) tr.rabi_frequency = v;
        if (r.number(j, "decay_rate", loc, v, false)) tr.decay_rate = v;
        scheme.transitions.push_back(std::move(tr));
    }

    {
        const auto& j = doc["settings"];
        const std::string loc = "/settings";
        r.check_keys(j, {"quantisation_volume", "interaction_length", "interaction_time",
                         "column_density", "beam_area", "detector_efficiency", "bandwidth",
                         "hbar", "epsilon0", "c"}, loc);
        PhysicalSettings& s = scheme.settings;
        r.number(j, "quantisation_volume", loc, s.quantisation_volume);
        r.number(j, "interaction_length", loc, s.interaction_length);
        r.number(j, "interaction_time", loc, s.interaction_time);
        r.number(j, "column_density", loc, s.column_density);
        r.number(j, "beam_area", loc, s.beam_area);
        r.number(j, "detector_efficiency", loc, s.detector_efficiency);
        r.number(j, "bandwidth", loc, s.bandwidth);
        r.number(j, "hbar", loc, s.hbar, false);
        r.number(j, "epsilon0", loc, s.epsilon0, false);
        r.number(j, "c", loc, s.c, false);
    }

    auto structural = validate_scheme(scheme);
    result.diagnostics.insert(result.diagnostics.end(), structural.begin(), structural.end());
    if (result.diagnostics.empty()) result.scheme = std::move(scheme);
    return result;
}

std::string serialize_scheme(const LevelScheme& scheme) {
    ordered_json doc;
    doc["format"] = 1;
    doc["mode"] = scheme.mode == SchemeMode::microscopic ? "microscopic" : "reduced";
    doc["levels"] = ordered_json::array();
    for (const auto& lv : scheme.levels)
        doc["levels"].push_back({{"name", lv.name}, {"detuning", lv.detuning}});
    doc["lasers"] = ordered_json::array();
    for (const auto& ls : scheme.lasers) {
        ordered_json j{{"name", ls.name},
                       {"angular_frequency", ls.angular_frequency}};
        if (ls.wavenumber) j["wavenumber"] = *ls.wavenumber;
        j["mean_photon_number"] = ls.mean_photon_number;
        doc["lasers"].push_back(std::move(j));
    }
    doc["transitions"] = ordered_json::array();
    for (const auto& tr : scheme.transitions) {
        ordered_json j{{"laser", tr.laser}, {"lower", tr.lower}, {"upper", tr.upper}};
        if (tr.dipole_moment) j["dipole_moment"] = *tr.dipole_moment;
        if (tr.rabi_frequency) j["rabi_frequency"] = *tr.rabi_frequency;
        if (tr.decay_rate) j["decay_rate"] = *tr.decay_rate;
        doc["transitions"].push_back(std::move(j));
    }
    const PhysicalSettings& s = scheme.settings;
    doc["settings"] = {{"quantisation_volume", s.quantisation_volume},
                       {"interaction_length", s.interaction_length},
                       {"interaction_time", s.interaction_time},
                       {"column_density", s.column_density},
                       {"beam_area", s.beam_area},
                       {"detector_efficiency", s.detector_efficiency},
                       {"bandwidth", s.bandwidth},
                       {"hbar", s.hbar},
                       {"epsilon0", s.epsilon0},
                       {"c", s.c}};
    return doc.dump(2);
}

std::vector<Diagnostic> validate_scheme(const LevelScheme& scheme) {
    std::vector<Diagnostic> diags;
    auto fail = [&](std::string msg, std::string loc) {
        diags.push_back({std::move(msg), std::move(loc), 0});
    };

    const bool micro = scheme.mode == SchemeMode::microscopic;

    std::set<std::string> seen;
    for (std::size_t i = 0; i < scheme.levels.size(); ++i) {
        const auto& lv = scheme.levels[i];
        if (lv.name.empty()) fail("level name must be non-empty", ptr("levels", i));
        if (!seen.insert(lv.name).second)
            fail("duplicate level name \"" + lv.name + "\"", ptr("levels", i));
        if (!std::isfinite(lv.detuning))
            fail("detuning must be finite", ptr("levels", i));
    }
    seen.clear();
    for (std::size_t i = 0; i < scheme.lasers.size(); ++i) {
        const auto& ls = scheme.lasers[i];
        const std::string loc = ptr("lasers", i);
        if (ls.name.empty()) fail("laser name must be non-empty", loc);
        if (!seen.insert(ls.name).second)
            fail("duplicate laser name \"" + ls.name + "\"", loc);
        if (!(ls.angular_frequency > 0)) fail("angular_frequency must be positive", loc);
        if (!(ls.mean_photon_number >= 1)) fail("mean_photon_number must be >= 1", loc);
        if (micro && !ls.wavenumber)
            fail("microscopic mode requires a wavenumber", loc);
        if (ls.wavenumber && !(*ls.wavenumber > 0))
            fail("wavenumber must be positive", loc);
    }

    std::set<std::tuple<std::string, std::string, std::string>> triples;
    for (std::size_t i = 0; i < scheme.transitions.size(); ++i) {
        const auto& tr = scheme.transitions[i];
        const std::string loc = ptr("transitions", i);
        if (scheme.laser_index(tr.laser) < 0)
            fail("transition references undeclared laser \"" + tr.laser + "\"", loc);
        for (const std::string& lvl : {tr.lower, tr.upper})
            if (scheme.level_index(lvl) < 0)
                fail("transition references undeclared level \"" + lvl + "\"", loc);
        if (tr.lower == tr.upper)
            fail("transition couples level \"" + tr.lower + "\" to itself", loc);
        if (!triples.insert({tr.laser, tr.lower, tr.upper}).second)
            fail("duplicate transition (" + tr.laser + ", " + tr.lower + ", " + tr.upper + ")",
                 loc);
        if (micro) {
            if (!tr.dipole_moment || !(*tr.dipole_moment > 0))
                fail("microscopic mode requires a positive dipole_moment", loc);
            if (tr.rabi_frequency || tr.decay_rate)
                fail("mode mismatch: rabi_frequency/decay_rate not allowed in microscopic mode",
                     loc);
        } else {
            if (!tr.rabi_frequency || !(*tr.rabi_frequency > 0))
                fail("reduced mode requires a positive rabi_frequency", loc);
            if (!tr.decay_rate || !(*tr.decay_rate > 0))
                fail("reduced mode requires a positive decay_rate", loc);
            if (tr.dipole_moment)
                fail("mode mismatch: dipole_moment not allowed in reduced mode", loc);
        }
    }

    const PhysicalSettings& s = scheme.settings;
    const std::string loc = "/settings";
    auto positive = [&](double v, const char* name) {
        if (!(v > 0) || !std::isfinite(v))
            fail(std::string(name) + " must be positive and finite", loc);
    };
    positive(s.quantisation_volume, "quantisation_volume");
    positive(s.interaction_length, "interaction_length");
    positive(s.interaction_time, "interaction_time");
    positive(s.column_density, "column_density");
    positive(s.beam_area, "beam_area");
    positive(s.bandwidth, "bandwidth");
    positive(s.hbar, "hbar");
    positive(s.epsilon0, "epsilon0");
    positive(s.c, "c");
    if (!(s.detector_efficiency > 0) || s.detector_efficiency > 1.0)
        fail("detector_efficiency must be in (0, 1]", loc);
    if (s.interaction_length > 0 && s.interaction_time > 0 && s.c > 0) {
        const double expected = s.c * s.interaction_time;
        if (std::abs(s.interaction_length - expected) > 1e-12 * expected)
            fail("interaction_length must equal c * interaction_time", loc);
    }
    return diags;
}

std::string scheme_hash(const LevelScheme& scheme) {
    const std::string canon = serialize_scheme(scheme);
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : canon) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

DerivedParams derive_optical_params(const LevelScheme& scheme) {
    DerivedParams params;
    const PhysicalSettings& s = scheme.settings;
    const std::size_t nl = scheme.lasers.size();
    const std::size_t nt = scheme.transitions.size();
    params.cross_section.resize(nl);
    params.coupling_g.assign(nt, 0.0);
    params.rabi.assign(nt, 0.0);
    params.decay.assign(nt, 0.0);

    for (std::size_t j = 0; j < nl; ++j) {
        const auto& ls = scheme.lasers[j];
        if (ls.wavenumber) {
            if (!(*ls.wavenumber > 0))
                throw std::invalid_argument("derive_optical_params: non-positive wavenumber");
            const double k = *ls.wavenumber;
            params.cross_section[j] = 6.0 * std::numbers::pi / (k * k);
        }
    }

    for (std::size_t t = 0; t < nt; ++t) {
        const auto& tr = scheme.transitions[t];
        const int j = scheme.laser_index(tr.laser);
        if (j < 0) throw std::invalid_argument("derive_optical_params: dangling laser reference");
        if (scheme.mode == SchemeMode::microscopic) {
            if (!tr.dipole_moment || *tr.dipole_moment < 0)
                throw std::invalid_argument("derive_optical_params: negative dipole moment");
            if (!scheme.lasers[j].wavenumber)
                throw std::invalid_argument("derive_optical_params: missing wavenumber");
            const double d = *tr.dipole_moment;
            const double omega = scheme.lasers[j].angular_frequency;
            const double k = *scheme.lasers[j].wavenumber;
            params.coupling_g[t] =
                std::sqrt(omega / (2.0 * s.hbar * s.epsilon0 * s.quantisation_volume)) * d;
            params.decay[t] =
                k * k * k * d * d / (3.0 * std::numbers::pi * s.epsilon0 * s.hbar);
        } else {
            if (!tr.rabi_frequency || !tr.decay_rate)
                throw std::invalid_argument("derive_optical_params: reduced mode needs Omega, gamma");
            params.rabi[t] = *tr.rabi_frequency;
            params.decay[t] = *tr.decay_rate;
        }
    }
    return params;
}

} // namespace lightshift
