#include "nlrd/config.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace nlrd {

using nlohmann::json;

namespace {

[[noreturn]] void bad_key(const std::string& key, const std::string& what) {
  throw std::invalid_argument("config key '" + key + "': " + what);
}

void reject_unknown(const json& obj, const std::string& where, const std::set<std::string>& known) {
  for (const auto& [k, v] : obj.items())
    if (!known.count(k)) bad_key(where.empty() ? k : where + "." + k, "unknown key");
}

template <class T>
T get(const json& obj, const std::string& key, const std::string& path) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    bad_key(path, "wrong type");
  }
}

std::vector<double> number_list(const json& v, const std::string& path) {
  if (!v.is_array()) bad_key(path, "expected an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) bad_key(path, "expected an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

std::vector<Center> parse_centers(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) bad_key(path, "expected a nonempty array of centers");
  std::vector<Center> out;
  for (const auto& c : v) {
    if (!c.is_object()) bad_key(path, "center must be an object with weight and alpha");
    reject_unknown(c, path, {"weight", "alpha"});
    Center center;
    center.weight = c.contains("weight") ? get<double>(c, "weight", path + ".weight") : 1.0;
    center.alpha = get<double>(c, "alpha", path + ".alpha");
    out.push_back(center);
  }
  return out;
}

json centers_json(const std::vector<Center>& centers) {
  json out = json::array();
  for (const auto& c : centers) out.push_back({{"weight", c.weight}, {"alpha", c.alpha}});
  return out;
}

KernelKind parse_kind(const json& v, const std::string& path) {
  if (!v.is_string()) bad_key(path, "expected a kernel name");
  try {
    return kernel_kind_from_string(v.get<std::string>());
  } catch (const std::exception&) {
    bad_key(path, "unknown kernel '" + v.get<std::string>() + "'");
  }
}

std::vector<int> parse_stoich(const json& v, const std::map<std::string, int>& index,
                              std::size_t species, const std::string& path) {
  std::vector<int> out(species, 0);
  if (!v.is_object()) bad_key(path, "expected an object of species counts");
  for (const auto& [name, count] : v.items()) {
    auto it = index.find(name);
    if (it == index.end()) bad_key(path, "unknown species '" + name + "'");
    if (!count.is_number_integer() || count.get<int>() < 0)
      bad_key(path + "." + name, "expected a nonnegative integer");
    out[it->second] = count.get<int>();
  }
  return out;
}

Placement parse_placement(const json& v, const std::string& path) {
  if (!v.is_object()) bad_key(path, "expected an object with a type");
  const std::string type = get<std::string>(v, "type", path + ".type");
  if (type == "none") {
    reject_unknown(v, path, {"type"});
    return NoProducts{};
  }
  if (type == "at_reactant") {
    reject_unknown(v, path, {"type"});
    return DiracAtReactant{};
  }
  if (type == "convex") {
    reject_unknown(v, path, {"type", "centers"});
    return ConvexCombination{parse_centers(v.at("centers"), path + ".centers")};
  }
  if (type == "pair_preserving") {
    reject_unknown(v, path, {"type", "p"});
    return PairPreserving{v.contains("p") ? get<double>(v, "p", path + ".p") : 1.0};
  }
  if (type == "dissociation") {
    reject_unknown(v, path, {"type", "separation", "centers"});
    Dissociation d;
    d.separation.kind = v.contains("separation") ? parse_kind(v.at("separation"), path + ".separation")
                                                 : KernelKind::Doi;
    d.separation.rate = 1.0;
    d.centers = parse_centers(v.at("centers"), path + ".centers");
    return d;
  }
  bad_key(path + ".type", "unknown placement '" + type + "'");
}

json placement_json(const Placement& p) {
  if (std::holds_alternative<NoProducts>(p)) return {{"type", "none"}};
  if (std::holds_alternative<DiracAtReactant>(p)) return {{"type", "at_reactant"}};
  if (const auto* c = std::get_if<ConvexCombination>(&p))
    return {{"type", "convex"}, {"centers", centers_json(c->centers)}};
  if (const auto* pp = std::get_if<PairPreserving>(&p)) return {{"type", "pair_preserving"}, {"p", pp->p}};
  const auto& d = std::get<Dissociation>(p);
  return {{"type", "dissociation"},
          {"separation", to_string(d.separation.kind)},
          {"centers", centers_json(d.centers)}};
}

NetworkSpec parse_custom(const json& v, int dimension) {
  NetworkSpec spec;
  spec.dimension = dimension;
  std::map<std::string, int> index;
  if (!v.contains("species") || !v.at("species").is_array())
    bad_key("network.species", "expected an array");
  for (const auto& s : v.at("species")) {
    if (!s.is_object()) bad_key("network.species", "expected objects with name and diffusivity");
    reject_unknown(s, "network.species", {"name", "diffusivity"});
    Species sp{get<std::string>(s, "name", "network.species.name"),
               get<double>(s, "diffusivity", "network.species.diffusivity")};
    if (!index.emplace(sp.name, static_cast<int>(spec.species.size())).second)
      bad_key("network.species", "duplicate species '" + sp.name + "'");
    spec.species.push_back(sp);
  }
  if (!v.contains("reactions") || !v.at("reactions").is_array())
    bad_key("network.reactions", "expected an array");
  std::size_t i = 0;
  for (const auto& r : v.at("reactions")) {
    const std::string path = "network.reactions[" + std::to_string(i++) + "]";
    if (!r.is_object()) bad_key(path, "expected an object");
    reject_unknown(r, path, {"reactants", "products", "rate", "kernel", "placement"});
    Reaction reaction;
    reaction.reactant_stoich = parse_stoich(r.at("reactants"), index, spec.species.size(), path + ".reactants");
    reaction.product_stoich = parse_stoich(r.at("products"), index, spec.species.size(), path + ".products");
    reaction.macroscopic_rate = get<double>(r, "rate", path + ".rate");
    reaction.kernel.kind = r.contains("kernel") ? parse_kind(r.at("kernel"), path + ".kernel")
                                                : KernelKind::Constant;
    reaction.kernel.rate = stoich_factorial(reaction.reactant_stoich) * reaction.macroscopic_rate;
    reaction.kernel.dimension = dimension;
    reaction.placement = parse_placement(r.at("placement"), path + ".placement");
    if (auto* d = std::get_if<Dissociation>(&reaction.placement)) d->separation.dimension = dimension;
    spec.reactions.push_back(std::move(reaction));
  }
  return spec;
}

json custom_json(const NetworkSpec& spec) {
  json species = json::array(), reactions = json::array();
  for (const auto& s : spec.species) species.push_back({{"name", s.name}, {"diffusivity", s.diffusivity}});
  auto stoich = [&](const std::vector<int>& v) {
    json o = json::object();
    for (std::size_t j = 0; j < v.size(); ++j)
      if (v[j] != 0) o[spec.species[j].name] = v[j];
    return o;
  };
  for (const auto& r : spec.reactions)
    reactions.push_back({{"reactants", stoich(r.reactant_stoich)},
                         {"products", stoich(r.product_stoich)},
                         {"rate", r.macroscopic_rate},
                         {"kernel", to_string(r.kernel.kind)},
                         {"placement", placement_json(r.placement)}});
  return {{"species", species}, {"reactions", reactions}};
}

std::vector<SpeciesInitial> parse_initial(const json& v, int dimension) {
  if (!v.is_array()) bad_key("initial", "expected an array, one entry per species");
  std::vector<SpeciesInitial> out;
  for (const auto& s : v) {
    if (!s.is_object()) bad_key("initial", "expected objects with constant and bumps");
    reject_unknown(s, "initial", {"constant", "bumps"});
    SpeciesInitial si;
    if (s.contains("constant")) si.constant = get<double>(s, "constant", "initial.constant");
    if (s.contains("bumps")) {
      if (!s.at("bumps").is_array()) bad_key("initial.bumps", "expected an array");
      for (const auto& b : s.at("bumps")) {
        reject_unknown(b, "initial.bumps", {"amplitude", "center", "rate"});
        GaussianBump bump;
        if (b.contains("amplitude")) bump.amplitude = get<double>(b, "amplitude", "initial.bumps.amplitude");
        const auto center = number_list(b.at("center"), "initial.bumps.center");
        const auto rate = number_list(b.at("rate"), "initial.bumps.rate");
        if (static_cast<int>(center.size()) != dimension || static_cast<int>(rate.size()) != dimension)
          bad_key("initial.bumps", "center and rate need one entry per dimension");
        for (int a = 0; a < dimension; ++a) {
          bump.center[a] = center[a];
          bump.rate[a] = rate[a];
        }
        si.bumps.push_back(bump);
      }
    }
    out.push_back(std::move(si));
  }
  return out;
}

json initial_json(const std::vector<SpeciesInitial>& initial, int dimension) {
  json out = json::array();
  for (const auto& s : initial) {
    json bumps = json::array();
    for (const auto& b : s.bumps) {
      json c = json::array(), r = json::array();
      for (int a = 0; a < dimension; ++a) {
        c.push_back(b.center[a]);
        r.push_back(b.rate[a]);
      }
      bumps.push_back({{"amplitude", b.amplitude}, {"center", c}, {"rate", r}});
    }
    out.push_back({{"constant", s.constant}, {"bumps", bumps}});
  }
  return out;
}

std::vector<double> default_diffusivities(const std::string& preset) {
  if (preset == "reversible_abcd") return {1.0, 0.5, 0.1, 0.1};
  return {1.0, 0.5, 0.1};
}

std::size_t species_count(const ExperimentConfig& c) {
  if (c.network.preset == "custom") return c.network.custom.species.size();
  return default_diffusivities(c.network.preset).size();
}

}  // namespace

ExperimentConfig default_config(int dimension) {
  if (dimension != 1 && dimension != 2) bad_key("dimension", "must be 1 or 2");
  ExperimentConfig c;
  c.dimension = dimension;
  c.grid_points = dimension == 1 ? 512 : 256;
  c.length = 2.0 * std::numbers::pi;
  c.network.diffusivities = default_diffusivities(c.network.preset);
  c.epsilon = c.length / 128.0;
  const int coarsest = 3, finest = dimension == 1 ? 6 : 5;
  for (int k = coarsest; k <= finest; ++k) c.epsilons.push_back(c.length * std::ldexp(1.0, -k));
  c.threads = default_threads();
  c.initial = dimension == 1 ? default_initial_1d() : default_initial_2d();
  return c;
}

ExperimentConfig parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    std::size_t line = 1;
    for (std::size_t i = 0; i < upto; ++i)
      if (text[i] == '\n') ++line;
    throw std::invalid_argument("config parse error at line " + std::to_string(line) + ": " +
                                e.what());
  }
  if (!doc.is_object()) throw std::invalid_argument("config parse error: top level must be an object");
  reject_unknown(doc, "",
                 {"dimension", "grid_points", "length", "dt", "final_time", "save_interval",
                  "profile_times", "network", "epsilon", "epsilon_fraction", "epsilons",
                  "epsilon_fractions", "gamma", "runs", "seed", "threads", "initial"});

  const int dimension = doc.contains("dimension") ? get<int>(doc, "dimension", "dimension") : 1;
  ExperimentConfig c = default_config(dimension);
  if (doc.contains("grid_points")) c.grid_points = get<int>(doc, "grid_points", "grid_points");
  if (doc.contains("length")) c.length = get<double>(doc, "length", "length");
  if (doc.contains("dt")) c.dt = get<double>(doc, "dt", "dt");
  if (doc.contains("final_time")) c.final_time = get<double>(doc, "final_time", "final_time");
  if (doc.contains("save_interval")) c.save_interval = get<double>(doc, "save_interval", "save_interval");
  if (doc.contains("profile_times")) c.profile_times = number_list(doc.at("profile_times"), "profile_times");
  if (doc.contains("gamma")) c.gamma = get<double>(doc, "gamma", "gamma");
  if (doc.contains("runs")) {
    const long runs = get<long>(doc, "runs", "runs");
    if (runs <= 0) bad_key("runs", "must be positive");
    c.runs = static_cast<std::size_t>(runs);
  }
  if (doc.contains("seed")) c.seed = get<std::uint64_t>(doc, "seed", "seed");
  if (doc.contains("threads")) {
    const long t = get<long>(doc, "threads", "threads");
    if (t <= 0) bad_key("threads", "must be positive");
    c.threads = static_cast<unsigned>(t);
  }

  // Widths default to fractions of the (possibly overridden) domain length.
  const double default_length = 2.0 * std::numbers::pi;
  if (c.length != default_length) {
    c.epsilon *= c.length / default_length;
    for (double& e : c.epsilons) e *= c.length / default_length;
  }
  if (doc.contains("epsilon") && doc.contains("epsilon_fraction"))
    bad_key("epsilon", "give either epsilon or epsilon_fraction");
  if (doc.contains("epsilon")) c.epsilon = get<double>(doc, "epsilon", "epsilon");
  if (doc.contains("epsilon_fraction"))
    c.epsilon = c.length * get<double>(doc, "epsilon_fraction", "epsilon_fraction");
  if (doc.contains("epsilons") && doc.contains("epsilon_fractions"))
    bad_key("epsilons", "give either epsilons or epsilon_fractions");
  if (doc.contains("epsilons")) c.epsilons = number_list(doc.at("epsilons"), "epsilons");
  if (doc.contains("epsilon_fractions")) {
    c.epsilons = number_list(doc.at("epsilon_fractions"), "epsilon_fractions");
    for (double& e : c.epsilons) e *= c.length;
  }

  if (doc.contains("network")) {
    const json& n = doc.at("network");
    if (!n.is_object()) bad_key("network", "expected an object");
    if (n.contains("preset")) c.network.preset = get<std::string>(n, "preset", "network.preset");
    if (c.network.preset == "custom") {
      reject_unknown(n, "network", {"preset", "species", "reactions"});
      c.network.custom = parse_custom(n, dimension);
      c.network.diffusivities.clear();
      for (const auto& s : c.network.custom.species) c.network.diffusivities.push_back(s.diffusivity);
    } else if (c.network.preset == "reversible_abc" || c.network.preset == "reversible_abcd") {
      reject_unknown(n, "network", {"preset", "diffusivities", "kappa1", "kappa2", "kernel",
                                    "binding", "pair_probability"});
      c.network.diffusivities = default_diffusivities(c.network.preset);
      if (n.contains("diffusivities"))
        c.network.diffusivities = number_list(n.at("diffusivities"), "network.diffusivities");
      if (n.contains("kappa1")) c.network.kappa1 = get<double>(n, "kappa1", "network.kappa1");
      if (n.contains("kappa2")) c.network.kappa2 = get<double>(n, "kappa2", "network.kappa2");
      if (n.contains("kernel")) c.network.kernel = parse_kind(n.at("kernel"), "network.kernel");
      if (n.contains("binding")) c.network.binding = parse_centers(n.at("binding"), "network.binding");
      if (n.contains("pair_probability"))
        c.network.pair_probability = get<double>(n, "pair_probability", "network.pair_probability");
    } else {
      bad_key("network.preset", "unknown preset '" + c.network.preset + "'");
    }
  }

  if (doc.contains("initial")) {
    c.initial = parse_initial(doc.at("initial"), dimension);
  } else if (c.network.preset == "reversible_abcd") {
    c.initial.push_back({});
  } else if (c.network.preset == "custom") {
    bad_key("initial", "required for custom networks");
  }
  validate_config(c, false);
  return c;
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str());
}

void validate_config(const ExperimentConfig& c, bool convergence) {
  if (c.dimension != 1 && c.dimension != 2) bad_key("dimension", "must be 1 or 2");
  if (c.grid_points < 1 || (c.grid_points & (c.grid_points - 1)) != 0)
    bad_key("grid_points", "must be a power of two");
  if (!(c.length > 0.0)) bad_key("length", "must be positive");
  if (!(c.dt > 0.0) || !std::isfinite(c.dt)) throw std::invalid_argument("Δt must be positive");
  if (!(c.final_time > 0.0)) bad_key("final_time", "must be positive");
  if (!(c.save_interval > 0.0)) bad_key("save_interval", "must be positive");
  const double steps = c.final_time / c.dt;
  if (std::abs(steps - std::round(steps)) > 1e-6) bad_key("final_time", "must be a multiple of dt");
  for (double t : c.profile_times) {
    if (t < 0.0 || t > c.final_time) bad_key("profile_times", "must lie in [0, final_time]");
    const double s = t / c.dt;
    if (std::abs(s - std::round(s)) > 1e-6) bad_key("profile_times", "must be multiples of dt");
  }
  if (!(c.gamma > 0.0)) bad_key("gamma", "must be positive");
  if (c.runs == 0) bad_key("runs", "must be positive");
  if (!(c.epsilon > 0.0)) bad_key("epsilon", "must be positive");
  for (double e : c.epsilons)
    if (!(e > 0.0)) bad_key("epsilons", "must be positive");
  if (!(c.network.kappa1 > 0.0)) bad_key("network.kappa1", "must be positive");
  if (c.network.kappa2 < 0.0) bad_key("network.kappa2", "must be nonnegative");
  if (c.network.diffusivities.size() != species_count(c))
    bad_key("network.diffusivities", "need one value per species");
  for (double d : c.network.diffusivities)
    if (!(d > 0.0)) bad_key("network.diffusivities", "must be positive");
  if (c.initial.size() != species_count(c)) bad_key("initial", "need one entry per species");
  if (convergence) {
    if (c.epsilons.size() < 3) throw std::invalid_argument("insufficient points");
    const double h = c.length / c.grid_points;
    for (double e : c.epsilons)
      if (e < 4.0 * h * (1.0 - 1e-12)) throw std::invalid_argument("ε below 4h guard");
  }
  // Builds the network once so structural errors surface at parse time.
  network_factory(c)(c.epsilon);
}

PeriodicGrid config_grid(const ExperimentConfig& c) {
  return make_grid(c.dimension, c.grid_points, c.length);
}

NetworkFactory network_factory(const ExperimentConfig& c) {
  const NetworkConfig n = c.network;
  const int dim = c.dimension;
  if (n.preset == "reversible_abc")
    return [n, dim](double eps) {
      return preset_reversible_abc(dim, n.diffusivities, n.kappa1, n.kappa2, eps, n.kernel,
                                   n.binding);
    };
  if (n.preset == "reversible_abcd")
    return [n, dim](double eps) {
      return preset_reversible_abcd(dim, n.diffusivities, n.kappa1, n.kappa2, eps, n.kernel,
                                    n.pair_probability);
    };
  return [n](double eps) {
    NetworkSpec spec = n.custom;
    for (auto& r : spec.reactions) {
      if (r.kernel.is_separation_kernel()) r.kernel.width = eps;
      if (auto* d = std::get_if<Dissociation>(&r.placement)) d->separation.width = eps;
    }
    return validate_network(std::move(spec));
  };
}

std::vector<Field> config_initial(const ExperimentConfig& c) {
  return sample_initial(c.initial, config_grid(c));
}

std::vector<double> config_save_times(const ExperimentConfig& c) {
  return save_schedule(c.final_time, c.save_interval, c.dt);
}

std::vector<double> config_profile_times(const ExperimentConfig& c) {
  // Snap onto the save grid so profile times match save times exactly.
  const auto saves = config_save_times(c);
  std::vector<double> wanted = c.profile_times.empty() ? std::vector<double>{c.final_time}
                                                       : c.profile_times;
  std::vector<double> out;
  for (double t : wanted) {
    const long s = std::lround(t / c.dt);
    bool found = false;
    for (double st : saves)
      if (std::lround(st / c.dt) == s) {
        out.push_back(st);
        found = true;
        break;
      }
    if (!found) bad_key("profile_times", "must coincide with save times");
  }
  return out;
}

std::string config_manifest(const ExperimentConfig& c, const std::string& command) {
  json network;
  network["preset"] = c.network.preset;
  network["diffusivities"] = c.network.diffusivities;
  if (c.network.preset == "custom") {
    network.update(custom_json(c.network.custom));
  } else {
    network["kappa1"] = c.network.kappa1;
    network["kappa2"] = c.network.kappa2;
    network["kernel"] = to_string(c.network.kernel);
    if (c.network.preset == "reversible_abc")
      network["binding"] = centers_json(c.network.binding);
    else
      network["pair_probability"] = c.network.pair_probability;
  }
  json doc;
  doc["command"] = command;
  doc["dimension"] = c.dimension;
  doc["grid_points"] = c.grid_points;
  doc["length"] = c.length;
  doc["dt"] = c.dt;
  doc["final_time"] = c.final_time;
  doc["save_interval"] = c.save_interval;
  doc["profile_times"] = config_profile_times(c);
  doc["network"] = network;
  doc["epsilon"] = c.epsilon;
  doc["epsilons"] = c.epsilons;
  doc["gamma"] = c.gamma;
  doc["runs"] = c.runs;
  doc["seed"] = c.seed;
  doc["threads"] = c.threads;
  doc["initial"] = initial_json(c.initial, c.dimension);
  return doc.dump(2) + "\n";
}

}  // namespace nlrd
