#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "bilayer/cli.hpp"

namespace bilayer::cli {

namespace {

std::string trim(const std::string& s)
{
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a])))
        ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1])))
        --b;
    return s.substr(a, b - a);
}

const std::set<std::string>& known_keys()
{
    static const std::set<std::string> keys{
        "problem.p",          "problem.q",          "problem.upper",          "problem.lower",
        "problem.domain",     "problem.tau1",       "problem.tau2",           "problem.radius",
        "problem.lx",         "problem.ly",         "grid.n1",                "grid.n2",
        "solver.method",      "solver.tol",         "solver.inner_tol",       "solver.max_iter",
        "solver.newton_max_iter", "solver.minres_max_iter", "solver.epsilon", "solver.eps_levels",
        "solver.radii",       "solver.fullplane_method", "sweep.factors",     "sweep.aspect",
        "sweep.n",            "output.dir",
    };
    return keys;
}

double to_double(const Entry& e, const std::string& key)
{
    const std::string s = trim(e.value);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
        throw ConfigError(e.line, key + ": expected a number, got '" + s + "'");
    return v;
}

int to_int(const Entry& e, const std::string& key)
{
    const std::string s = trim(e.value);
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw ConfigError(e.line, key + ": expected an integer, got '" + s + "'");
    return v;
}

std::vector<double> to_list(const Entry& e, const std::string& key)
{
    std::vector<double> out;
    std::stringstream ss(e.value);
    std::string item;
    while (std::getline(ss, item, ';')) {
        if (trim(item).empty())
            continue;
        out.push_back(to_double({item, e.line}, key));
    }
    return out;
}

std::vector<Point> to_points(const Entry& e, const std::string& key)
{
    std::vector<Point> pts;
    const std::string s = trim(e.value);
    if (s.empty() || s == "none")
        return pts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ';')) {
        item = trim(item);
        if (item.empty())
            continue;
        if (item.front() != '(' || item.back() != ')')
            throw ConfigError(e.line, key + ": vortex '" + item + "' must look like (x,y)");
        const std::string inner = item.substr(1, item.size() - 2);
        const auto comma = inner.find(',');
        if (comma == std::string::npos)
            throw ConfigError(e.line, key + ": vortex '" + item + "' must look like (x,y)");
        pts.push_back({to_double({inner.substr(0, comma), e.line}, key),
                       to_double({inner.substr(comma + 1), e.line}, key)});
    }
    return pts;
}

} // namespace

EntryMap parse_entries(const std::string& text)
{
    EntryMap m;
    std::string section;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (s.empty())
            continue;
        if (s.front() == '[') {
            if (s.back() != ']' || s.size() < 3)
                throw ConfigError(line, "malformed section header '" + s + "'");
            section = trim(s.substr(1, s.size() - 2));
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError(line, "expected 'key = value', got '" + s + "'");
        if (section.empty())
            throw ConfigError(line, "key outside of any [section]");
        const std::string key = section + "." + trim(s.substr(0, eq));
        if (!known_keys().count(key))
            throw ConfigError(line, "unknown key '" + key + "'");
        if (m.count(key))
            throw ConfigError(line, "duplicate key '" + key + "'");
        m[key] = {trim(s.substr(eq + 1)), line};
    }
    return m;
}

void apply_override(EntryMap& entries, const std::string& assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError(0, "override '" + assignment + "' must be section.key=value");
    const std::string key = trim(assignment.substr(0, eq));
    if (!known_keys().count(key))
        throw ConfigError(0, "override names unknown key '" + key + "'");
    entries[key] = {trim(assignment.substr(eq + 1)), 0};
}

RunConfig build_config(const EntryMap& m)
{
    RunConfig c;
    auto has = [&](const std::string& k) { return m.count(k) > 0; };
    auto at = [&](const std::string& k) -> const Entry& { return m.at(k); };
    auto line_of = [&](const std::string& k) { return has(k) ? at(k).line : 0; };

    for (const auto& [k, e] : m)
        c.entries[k] = e.value;

    if (has("problem.p"))
        c.params.p = to_double(at("problem.p"), "p");
    if (!has("problem.q"))
        throw ConfigError(0, "problem.q is required");
    c.params.q = to_double(at("problem.q"), "q");
    try {
        validate(c.params);
        require_indefinite(build_coupling(c.params));
    } catch (const std::exception& e) {
        throw ConfigError(line_of(has("problem.p") && c.params.p <= 0 ? "problem.p" : "problem.q"), e.what());
    }

    if (has("problem.upper"))
        c.vortices.upper = to_points(at("problem.upper"), "upper");
    if (has("problem.lower"))
        c.vortices.lower = to_points(at("problem.lower"), "lower");

    const std::string kind = has("problem.domain") ? at("problem.domain").value : "torus";
    auto positive = [&](const std::string& k) {
        if (!has(k))
            throw ConfigError(line_of("problem.domain"), k + " is required for domain " + kind);
        const double v = to_double(at(k), k);
        if (!(v > 0))
            throw ConfigError(at(k).line, k + " must be positive");
        return v;
    };
    if (kind == "torus") {
        const double t1 = positive("problem.tau1");
        const double t2 = has("problem.tau2") ? positive("problem.tau2") : t1;
        c.domain = DomainSpec::torus(t1, t2);
    } else if (kind == "disk") {
        c.domain = DomainSpec::disk(positive("problem.radius"));
    } else if (kind == "rectangle") {
        c.domain = DomainSpec::rectangle(positive("problem.lx"), positive("problem.ly"));
    } else {
        throw ConfigError(line_of("problem.domain"), "domain must be torus, disk or rectangle");
    }
    for (const auto& [key, list] : {std::pair{"problem.upper", &c.vortices.upper},
                                    std::pair{"problem.lower", &c.vortices.lower}})
        for (const Point& p : *list)
            if (!c.domain.contains(p)) {
                std::ostringstream os;
                os << "vortex (" << p.x << "," << p.y << ") lies outside the " << to_string(c.domain.kind);
                throw ConfigError(line_of(key), os.str());
            }
    if (c.domain.kind == DomainSpec::Kind::Torus) {
        const double thr = threshold_area(c.params, c.vortices);
        if (!(c.domain.area() > thr)) {
            std::ostringstream os;
            os << "torus area " << c.domain.area() << " is not above the threshold " << thr
               << "; torus solves will be rejected";
            c.warnings.push_back(os.str());
        }
    }

    if (has("grid.n1"))
        c.n1 = to_int(at("grid.n1"), "n1");
    c.n2 = has("grid.n2") ? to_int(at("grid.n2"), "n2") : c.n1;
    if (c.n1 < 8 || c.n2 < 8)
        throw ConfigError(line_of(c.n1 < 8 ? "grid.n1" : "grid.n2"), "grid needs at least 8 nodes per side");

    try {
        if (has("solver.method"))
            c.outer.method = outer_method_from_string(at("solver.method").value);
        if (has("solver.fullplane_method")) {
            c.fullplane_method = at("solver.fullplane_method").value;
            outer_method_from_string(c.fullplane_method);
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(line_of(has("solver.method") ? "solver.method" : "solver.fullplane_method"), e.what());
    }
    auto pos_double = [&](const std::string& k, double& target) {
        if (!has(k))
            return;
        target = to_double(at(k), k);
        if (!(target > 0))
            throw ConfigError(at(k).line, k + " must be positive");
    };
    auto pos_int = [&](const std::string& k, int& target) {
        if (!has(k))
            return;
        target = to_int(at(k), k);
        if (target < 1)
            throw ConfigError(at(k).line, k + " must be at least 1");
    };
    pos_double("solver.tol", c.outer.tol);
    pos_double("solver.inner_tol", c.outer.inner.tol);
    pos_int("solver.max_iter", c.outer.max_iter);
    pos_int("solver.newton_max_iter", c.outer.newton_max_iter);
    pos_int("solver.minres_max_iter", c.outer.minres_max_iter);
    pos_double("solver.epsilon", c.epsilon);
    pos_int("solver.eps_levels", c.eps_levels);
    if (has("solver.radii")) {
        c.radii = to_list(at("solver.radii"), "radii");
        for (std::size_t i = 0; i < c.radii.size(); ++i)
            if (!(c.radii[i] > 0) || (i > 0 && !(c.radii[i] > c.radii[i - 1])))
                throw ConfigError(at("solver.radii").line, "radii must be positive and strictly increasing");
        if (c.radii.empty())
            throw ConfigError(at("solver.radii").line, "radii must not be empty");
    }
    if (has("sweep.factors")) {
        c.sweep_factors = to_list(at("sweep.factors"), "factors");
        for (double f : c.sweep_factors)
            if (!(f > 0))
                throw ConfigError(at("sweep.factors").line, "sweep factors must be positive");
    }
    pos_double("sweep.aspect", c.sweep_aspect);
    pos_int("sweep.n", c.sweep_n);
    if (has("output.dir"))
        c.out_dir = at("output.dir").value;
    return c;
}

RunConfig parse_config(const std::string& text) { return build_config(parse_entries(text)); }

std::string config_echo(const RunConfig& cfg)
{
    std::string s;
    for (const auto& [k, v] : cfg.entries)
        s += k + " = " + v + "\n";
    return s;
}

std::string sha256_hex(const std::string& data)
{
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 || EVP_DigestFinal_ex(ctx, md.data(), &len) != 1) {
        EVP_MD_CTX_free(ctx);
        throw std::runtime_error("sha256 failed");
    }
    EVP_MD_CTX_free(ctx);
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i)
        os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return os.str();
}

} // namespace bilayer::cli
