#include "snowcircle/rule.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace snowcircle {

using nlohmann::json;

unsigned max_depth_cap() {
    static unsigned cap = [] {
        if (const char* env = std::getenv("SNOWCIRCLE_MAX_DEPTH")) {
            long v = std::strtol(env, nullptr, 10);
            if (v >= 1 && v <= 48) return static_cast<unsigned>(v);
        }
        return 26u;
    }();
    return cap;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

GeneratorSpec GeneratorSpec::parse(const std::string& text) {
    GeneratorSpec spec;
    if (text == "uniform-halve") {
        spec.kind = Kind::uniform_halve;
        spec.k_cap = 1;
        return spec;
    }
    if (text.rfind("periodic-keep:", 0) == 0) {
        spec.kind = Kind::periodic_keep;
        spec.period = static_cast<unsigned>(std::stoul(text.substr(14)));
        if (spec.period < 2) throw std::invalid_argument("periodic-keep period must be >= 2");
        spec.k_cap = 1;
        return spec;
    }
    if (text.rfind("random:", 0) == 0) {
        spec.kind = Kind::seeded_random;
        std::stringstream ss(text.substr(7));
        std::string item;
        bool have_p = false;
        while (std::getline(ss, item, ',')) {
            auto eq = item.find('=');
            if (eq == std::string::npos) throw std::invalid_argument("bad generator field: " + item);
            std::string k = item.substr(0, eq), v = item.substr(eq + 1);
            if (k == "p") {
                spec.keep_prob = std::stod(v);
                have_p = true;
            } else if (k == "seed") {
                spec.seed = std::stoull(v);
            } else if (k == "cap") {
                spec.k_cap = static_cast<unsigned>(std::stoul(v));
            } else {
                throw std::invalid_argument("unknown generator field: " + k);
            }
        }
        if (!have_p || spec.keep_prob < 0.0 || spec.keep_prob >= 1.0)
            throw std::invalid_argument("random generator needs p in [0,1)");
        if (spec.k_cap < 1)
            throw std::invalid_argument("keep decisions requested with cap 0");
        return spec;
    }
    throw std::invalid_argument("unknown generator spec: '" + text + "'");
}

std::string GeneratorSpec::str() const {
    switch (kind) {
        case Kind::uniform_halve: return "uniform-halve";
        case Kind::periodic_keep: return "periodic-keep:" + std::to_string(period);
        case Kind::seeded_random: {
            std::ostringstream os;
            os << "random:p=" << keep_prob << ",seed=" << seed << ",cap=" << k_cap;
            return os.str();
        }
    }
    return "?";
}

DiameterRule::DiameterRule(Topology topology, unsigned depth,
                           std::unordered_set<std::uint64_t> keeps, unsigned max_consecutive_keeps,
                           std::string seed_info_json)
    : topology_(topology),
      depth_(depth),
      k_cap_(max_consecutive_keeps),
      keeps_(std::move(keeps)),
      seed_info_json_(std::move(seed_info_json)) {
    if (depth_ > max_depth_cap())
        throw std::invalid_argument("rule depth exceeds SNOWCIRCLE_MAX_DEPTH cap");
    if (k_cap_ < 1) throw std::invalid_argument("max_consecutive_keeps must be positive");
    validate_and_index();
}

void DiameterRule::validate_and_index() {
    level_keeps_.assign(depth_ + 1, 0);
    for (std::uint64_t key : keeps_) {
        if (key == 0) throw std::invalid_argument("invalid decision key");
        unsigned level = 63;
        while (!(key >> level)) --level;
        if (level >= depth_) throw std::invalid_argument("keep decision below explicit depth");
        ++level_keeps_[level];
    }
    // Keep runs along root paths must respect the cap; checked while building
    // the per-level minimum halve counts used by max_level_diameter.
    min_halves_.assign(depth_ + 1, 0);
    std::vector<std::uint8_t> halves{0}, run{0};
    for (unsigned level = 0; level < depth_; ++level) {
        std::size_t width = std::size_t{1} << level;
        std::vector<std::uint8_t> next_halves(width * 2), next_run(width * 2);
        unsigned best = depth_ + 1;
        for (std::size_t i = 0; i < width; ++i) {
            bool keep = keeps_.count((std::uint64_t{1} << level) | i) > 0;
            std::uint8_t r = keep ? static_cast<std::uint8_t>(run[i] + 1) : 0;
            if (keep && r > k_cap_)
                throw std::invalid_argument("keep run exceeds max_consecutive_keeps");
            std::uint8_t h = static_cast<std::uint8_t>(halves[i] + (keep ? 0 : 1));
            next_halves[2 * i] = next_halves[2 * i + 1] = h;
            next_run[2 * i] = next_run[2 * i + 1] = r;
            if (h < best) best = h;
        }
        halves = std::move(next_halves);
        run = std::move(next_run);
        min_halves_[level + 1] = best;
    }
}

Decision DiameterRule::decision(const DyadicInterval& I) const {
    if (I.level >= depth_) return Decision::halve;
    return keeps_.count(node_key(I)) ? Decision::keep : Decision::halve;
}

bool DiameterRule::any_keep_at_level(unsigned level) const {
    return level < depth_ && level_keeps_[level] > 0;
}

unsigned DiameterRule::delta_exponent(const DyadicInterval& I) const {
    unsigned halves = 0;
    unsigned explicit_part = std::min(I.level, depth_);
    for (unsigned k = 0; k < explicit_part; ++k) {
        std::uint64_t ancestor_index = I.index >> (I.level - k);
        if (!keeps_.count((std::uint64_t{1} << k) | ancestor_index)) ++halves;
    }
    halves += I.level - explicit_part;  // all-halve tail
    return halves;
}

unsigned DiameterRule::delta_truncated_exponent(unsigned n, const DyadicInterval& I) const {
    if (I.level <= n) return delta_exponent(I);
    return delta_exponent(ancestor_at(I, n)) + (I.level - n);
}

unsigned DiameterRule::max_diam_exponent(unsigned n) const {
    if (n <= depth_) return min_halves_[n];
    return min_halves_[depth_] + (n - depth_);
}

DiameterRule DiameterRule::generate(const GeneratorSpec& spec, unsigned depth, Topology topology) {
    if (depth > max_depth_cap())
        throw std::invalid_argument("generation depth exceeds SNOWCIRCLE_MAX_DEPTH cap");
    std::unordered_set<std::uint64_t> keeps;
    json info;
    info["generator"] = spec.str();
    switch (spec.kind) {
        case GeneratorSpec::Kind::uniform_halve:
            break;
        case GeneratorSpec::Kind::periodic_keep:
            for (unsigned level = 0; level < depth; level += spec.period)
                for (std::uint64_t i = 0; i < (std::uint64_t{1} << level); ++i)
                    keeps.insert((std::uint64_t{1} << level) | i);
            break;
        case GeneratorSpec::Kind::seeded_random: {
            // Threshold comparison on a per-interval hash keeps draws
            // independent of enumeration order.
            const double scaled = std::ldexp(spec.keep_prob, 64);
            const std::uint64_t threshold =
                scaled >= std::ldexp(1.0, 64) ? ~std::uint64_t{0}
                                              : static_cast<std::uint64_t>(scaled);
            std::vector<std::uint8_t> run{0};
            for (unsigned level = 0; level < depth; ++level) {
                std::size_t width = std::size_t{1} << level;
                std::vector<std::uint8_t> next_run(width * 2);
                for (std::size_t i = 0; i < width; ++i) {
                    std::uint64_t key = (std::uint64_t{1} << level) | i;
                    bool keep = run[i] < spec.k_cap && splitmix64(spec.seed ^ key) < threshold;
                    if (keep) keeps.insert(key);
                    std::uint8_t r = keep ? static_cast<std::uint8_t>(run[i] + 1) : 0;
                    next_run[2 * i] = next_run[2 * i + 1] = r;
                }
                run = std::move(next_run);
            }
            info["seed"] = spec.seed;
            info["keep_prob"] = spec.keep_prob;
            break;
        }
    }
    return DiameterRule(topology, depth, std::move(keeps), spec.k_cap, info.dump());
}

json DiameterRule::to_json() const {
    json j;
    j["topology"] = to_string(topology_);
    j["depth"] = depth_;
    json decisions = json::object();
    // Canonical form records keep decisions; absent entries halve.
    std::vector<DyadicInterval> sorted;
    for (std::uint64_t key : keeps_) {
        unsigned level = 63;
        while (!(key >> level)) --level;
        sorted.emplace_back(level, key ^ (std::uint64_t{1} << level));
    }
    std::sort(sorted.begin(), sorted.end());
    for (const auto& I : sorted) decisions[I.str()] = "keep";
    j["decisions"] = decisions;
    j["tail"] = "halve";
    j["max_consecutive_keeps"] = k_cap_;
    j["seed_info"] = json::parse(seed_info_json_);
    return j;
}

DiameterRule DiameterRule::from_json(const json& j) {
    Topology topo = topology_from_string(j.at("topology").get<std::string>());
    unsigned depth = j.at("depth").get<unsigned>();
    if (j.at("tail").get<std::string>() != "halve")
        throw std::invalid_argument("unsupported tail policy");
    unsigned k_cap = j.at("max_consecutive_keeps").get<unsigned>();
    std::unordered_set<std::uint64_t> keeps;
    for (const auto& [key, value] : j.at("decisions").items()) {
        DyadicInterval I = DyadicInterval::parse(key);
        std::string d = value.get<std::string>();
        if (d == "keep")
            keeps.insert(node_key(I));
        else if (d != "halve")
            throw std::invalid_argument("unknown decision: '" + d + "'");
    }
    std::string seed_info = j.contains("seed_info") ? j.at("seed_info").dump() : "{}";
    return DiameterRule(topo, depth, std::move(keeps), k_cap, std::move(seed_info));
}

std::string DiameterRule::canonical_text() const { return to_json().dump(2); }

std::string DiameterRule::hash() const {
    std::ostringstream os;
    os << std::hex << fnv1a64(canonical_text());
    return os.str();
}

bool DiameterRule::operator==(const DiameterRule& o) const {
    return topology_ == o.topology_ && depth_ == o.depth_ && k_cap_ == o.k_cap_ &&
           keeps_ == o.keeps_;
}

DiameterRule load_rule_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open rule file: " + path);
    json j;
    try {
        in >> j;
        return DiameterRule::from_json(j);
    } catch (const json::exception& e) {
        throw std::runtime_error("malformed rule file " + path + ": " + e.what());
    }
}

void save_rule_file(const DiameterRule& rule, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write rule file: " + path);
    out << rule.canonical_text() << "\n";
}

}  // namespace snowcircle
