#include "ambddc/harness.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace ambddc {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
    throw std::invalid_argument("config: invalid value '" + value + "' for key '" + key + "'");
}

long long to_int(const std::string& key, const std::string& value) {
    std::size_t used = 0;
    long long v = 0;
    try {
        v = std::stoll(value, &used);
    } catch (const std::exception&) {
        bad_value(key, value);
    }
    if (used != value.size()) bad_value(key, value);
    return v;
}

double to_double(const std::string& key, const std::string& value) {
    const std::string v = lower(value);
    if (v == "inf" || v == "infinity") return std::numeric_limits<double>::infinity();
    std::size_t used = 0;
    double d = 0.0;
    try {
        d = std::stod(value, &used);
    } catch (const std::exception&) {
        bad_value(key, value);
    }
    if (used != value.size()) bad_value(key, value);
    return d;
}

bool to_bool(const std::string& key, const std::string& value) {
    const std::string v = lower(value);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    bad_value(key, value);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) out.push_back(trim(item));
    return out;
}

std::pair<int, int> to_factors(const std::string& key, const std::string& value) {
    const auto parts = split(lower(value), 'x');
    if (parts.size() != 2) bad_value(key, value);
    return {static_cast<int>(to_int(key, parts[0])), static_cast<int>(to_int(key, parts[1]))};
}

ConstraintMode to_mode(const std::string& key, const std::string& value) {
    const std::string v = lower(value);
    if (v == "corners" || v == "c") return ConstraintMode::corners;
    if (v == "corners+edges" || v == "c+e") return ConstraintMode::corners_and_edges;
    if (v == "adaptive") return ConstraintMode::adaptive;
    bad_value(key, value);
}

}  // namespace

ConfigFile ConfigFile::parse(std::istream& in) {
    ConfigFile file;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos || trim(line.substr(0, eq)).empty())
            throw std::invalid_argument("config: line " + std::to_string(number) + " is not of the form key = value");
        file.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return file;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path.string());
    return parse(in);
}

void ConfigFile::set(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || trim(assignment.substr(0, eq)).empty())
        throw std::invalid_argument("config: override '" + assignment + "' is not of the form key=value");
    set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

std::optional<std::string> ConfigFile::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
}

std::string mode_name(ConstraintMode mode) {
    switch (mode) {
        case ConstraintMode::corners: return "corners";
        case ConstraintMode::corners_and_edges: return "corners+edges";
        case ConstraintMode::adaptive: return "adaptive";
    }
    return "corners";
}

std::string format_tau(double tau) {
    if (std::isinf(tau)) return "inf";
    std::ostringstream os;
    os << tau;
    return os.str();
}

ExperimentConfig default_config() {
    ExperimentConfig c;
    c.material = {1.0, 2.0};
    c.plans = {{4, 4, JagSpec{1, 5, 1, 2}}};
    c.sweep_taus = {std::numeric_limits<double>::infinity(), 10.0, 3.0, 2.0};
    return c;
}

ExperimentConfig make_config(const ConfigFile& file) {
    ExperimentConfig c = default_config();
    std::set<std::string> used;
    auto value = [&](const std::string& key) -> std::optional<std::string> {
        auto v = file.get(key);
        if (v) used.insert(key);
        return v;
    };
    if (auto v = value("nx")) c.nx = static_cast<int>(to_int("nx", *v));
    if (auto v = value("ny")) c.ny = static_cast<int>(to_int("ny", *v));
    if (auto v = value("lambda")) c.material.lame_lambda = to_double("lambda", *v);
    if (auto v = value("mu")) c.material.lame_mu = to_double("mu", *v);
    if (auto v = value("levels")) c.levels = static_cast<int>(to_int("levels", *v));
    if (c.levels < 2) throw std::invalid_argument("config: levels must be at least 2");

    c.plans.clear();
    for (int l = 1; l < c.levels; ++l) {
        const std::string prefix = std::to_string(l);
        LevelPlan plan;
        std::tie(plan.kx, plan.ky) = l == 1 ? std::pair{4, 4} : (l == 2 ? std::pair{2, 2} : std::pair{1, 1});
        if (l == 1) plan.jag = JagSpec{1, 5, 1, 2};
        if (l == 2) plan.jag = JagSpec{0, 1, 1, 1};
        if (auto v = value("partition." + prefix)) std::tie(plan.kx, plan.ky) = to_factors("partition." + prefix, *v);
        JagSpec jag = plan.jag.value_or(JagSpec{0, 1, 0, 2});
        if (auto v = value("jag." + prefix + ".pair")) {
            const auto parts = split(*v, ',');
            if (parts.size() != 2) bad_value("jag." + prefix + ".pair", *v);
            jag.s = to_int("jag." + prefix + ".pair", parts[0]);
            jag.t = to_int("jag." + prefix + ".pair", parts[1]);
        }
        if (auto v = value("jag." + prefix + ".amplitude")) jag.amplitude = static_cast<int>(to_int("jag.amplitude", *v));
        if (auto v = value("jag." + prefix + ".period")) jag.period = static_cast<int>(to_int("jag.period", *v));
        if (jag.amplitude > 0) plan.jag = jag;
        else plan.jag.reset();
        c.plans.push_back(plan);
    }

    if (auto v = value("mode")) c.mode = to_mode("mode", *v);
    if (auto v = value("tau")) c.tau = to_double("tau", *v);
    if (auto v = value("sweep.taus")) {
        c.sweep_taus.clear();
        for (const auto& item : split(*v, ',')) c.sweep_taus.push_back(to_double("sweep.taus", item));
    }
    if (auto v = value("pcg.tol")) c.pcg.tol = to_double("pcg.tol", *v);
    if (auto v = value("pcg.max_it")) c.pcg.max_it = static_cast<int>(to_int("pcg.max_it", *v));
    if (auto v = value("seed")) c.seed = static_cast<unsigned long long>(to_int("seed", *v));
    if (auto v = value("rhs")) {
        const std::string r = lower(*v);
        if (r == "uniform") c.rhs = RhsKind::uniform;
        else if (r == "random") c.rhs = RhsKind::random;
        else bad_value("rhs", *v);
    }
    if (auto v = value("reduced")) c.reduced = to_bool("reduced", *v);
    if (auto v = value("scaling")) {
        const std::string s = lower(*v);
        if (s == "stiffness") c.scaling = Scaling::stiffness;
        else if (s == "multiplicity") c.scaling = Scaling::multiplicity;
        else bad_value("scaling", *v);
    }
    if (auto v = value("promote_corners")) c.promote_corners = to_bool("promote_corners", *v);
    if (auto v = value("dump_matrices")) c.dump_matrices = to_bool("dump_matrices", *v);
    if (auto v = value("out")) c.out = *v;

    for (const auto& [key, val] : file.values())
        if (!used.count(key)) {
            // Keys for levels beyond L are accepted and ignored.
            const bool level_key = key.rfind("partition.", 0) == 0 || key.rfind("jag.", 0) == 0;
            if (!level_key) throw std::invalid_argument("config: unknown key '" + key + "'");
        }
    c.validate();
    return c;
}

void ExperimentConfig::validate() const {
    if (nx < 2 || ny < 2) throw std::invalid_argument("config: nx and ny must be at least 2");
    if (!(material.lame_mu > 0.0) || material.lame_lambda < 0.0)
        throw std::invalid_argument("config: require mu > 0 and lambda >= 0");
    if (levels < 2) throw std::invalid_argument("config: levels must be at least 2");
    if (static_cast<int>(plans.size()) != levels - 1)
        throw std::invalid_argument("config: one partition per level 1..L-1 is required");
    int gx = nx, gy = ny;
    for (std::size_t l = 0; l < plans.size(); ++l) {
        const auto& p = plans[l];
        if (p.kx < 1 || p.ky < 1 || gx % p.kx != 0 || gy % p.ky != 0)
            throw std::invalid_argument("config: partition." + std::to_string(l + 1) + " does not divide the level grid");
        gx = p.kx;
        gy = p.ky;
    }
    if (mode == ConstraintMode::adaptive && !(tau > 1.0)) throw std::invalid_argument("config: tau must exceed 1");
    for (double t : sweep_taus)
        if (!(t > 1.0)) throw std::invalid_argument("config: sweep.taus entries must exceed 1");
    if (!(pcg.tol > 0.0) || pcg.max_it < 1) throw std::invalid_argument("config: invalid pcg settings");
}

}  // namespace ambddc
