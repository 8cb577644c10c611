#include "formctl/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "formctl/error.hpp"

namespace formctl {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string strip_comment(std::string_view line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_string = !in_string;
    if (line[i] == '#' && !in_string) return std::string(line.substr(0, i));
  }
  return std::string(line);
}

bool parse_number(std::string_view text, double& out) {
  text = trim(text);
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  std::string cleaned;
  for (char c : text) {
    if (c != '_') cleaned.push_back(c);
  }
  const char* begin = cleaned.data();
  const char* end = begin + cleaned.size();
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

ConfigValue parse_value(std::string_view raw, const std::string& key, int line_no) {
  const std::string_view text = trim(raw);
  auto fail = [&](const std::string& what) {
    throw ConfigError(key, "line " + std::to_string(line_no) + ": " + what);
  };
  if (text.empty()) fail("missing value");
  if (text.front() == '"') {
    if (text.size() < 2 || text.back() != '"') fail("unterminated string");
    return std::string(text.substr(1, text.size() - 2));
  }
  if (text == "true") return true;
  if (text == "false") return false;
  if (text.front() == '[') {
    if (text.back() != ']') fail("unterminated array");
    std::vector<double> values;
    std::string_view body = trim(text.substr(1, text.size() - 2));
    while (!body.empty()) {
      const auto comma = body.find(',');
      const std::string_view item = trim(body.substr(0, comma));
      if (!item.empty()) {
        double v = 0.0;
        if (!parse_number(item, v)) fail("arrays must hold numbers");
        values.push_back(v);
      }
      if (comma == std::string_view::npos) break;
      body = body.substr(comma + 1);
    }
    return values;
  }
  double number = 0.0;
  if (!parse_number(text, number)) fail("cannot parse value '" + std::string(text) + "'");
  return number;
}

}  // namespace

ConfigTable ConfigTable::parse(std::string_view text) {
  ConfigTable table;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string stripped = strip_comment(raw);
    const std::string_view line = trim(stripped);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("", "line " + std::to_string(line_no) + ": malformed section header");
      }
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("", "line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string name(trim(line.substr(0, eq)));
    if (name.empty()) throw ConfigError("", "line " + std::to_string(line_no) + ": empty key");
    const std::string key = section.empty() ? name : section + "." + name;
    if (table.contains(key)) throw ConfigError(key, "duplicate key");
    table.entries_[key] = parse_value(line.substr(eq + 1), key, line_no);
  }
  return table;
}

ConfigTable ConfigTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

const ConfigValue& ConfigTable::at(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError(key, "missing key");
  return it->second;
}

nlohmann::json ConfigTable::to_json() const {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [key, value] : entries_) {
    const auto dot = key.find('.');
    nlohmann::json& slot =
        dot == std::string::npos ? out[key] : out[key.substr(0, dot)][key.substr(dot + 1)];
    std::visit([&slot](const auto& v) { slot = v; }, value);
  }
  return out;
}

const ConfigTable& default_config() {
  static const ConfigTable table = ConfigTable::parse(R"(
[material]
E = 9200.0
L = 7.5
A = 109.31
temperature_label = "1150C"
temperature = 1150.0

[desired]
sigma_star = 146.0
v_star_left = 1.5
v_star_right = 0.0

[law]
variant = "norton"
sigma_ref = 146.0
exponent = 5.0
t_ref = 5.0
km_generation = 10000.0
km_annihilation = 5.0
avrami_rate = 1.5
avrami_exponent = 2.0
sigma0_lamellar = 120.0
sigma0_globular = 80.0
taylor_alpha = 0.3
taylor_factor = 3.06
shear_modulus = 40000.0
burgers_vector = 2.8e-7
drag_stress = 50.0
rate_exponent = 3.0
flow_t_ref = 1.0
initial_globular_fraction = 0.0
initial_dislocation_density = 1.0e6
fd_step = 0.0

[solver]
scheme = "nonlinear-split"
n_cells = 200
cfl = 0.5
t_end = 1.0
record_every = 10

[control]
law_variant = "riemann-gain"
left = "feedback"
right = "wall"

[lyapunov]
mu_hat_policy = "paper-default"
mu_hat = 0.0
mu_hat_max = 0.0
n_scan = 1000
n_grid = 1025

[initial]
profile = "uniform"
sigma0 = 0.0
v0 = 0.0
bump_sigma = 1.0
bump_v = 0.0
bump_center = 0.5
bump_width = 0.4

[output]
dir = "out"
name = "run"

[sweep]
path = ""
values = []

[refine]
levels = [64, 128, 256]
t_end = 0.0
cfl = 0.5
profile = "bump"
)");
  return table;
}

namespace {

class Reader {
 public:
  explicit Reader(const ConfigTable& t) : t_(t) {}

  double number(const std::string& key) const {
    const auto* v = std::get_if<double>(&t_.at(key));
    if (!v) throw ConfigError(key, "expected a number");
    return *v;
  }
  double positive(const std::string& key) const {
    const double v = number(key);
    if (!(v > 0.0)) throw ConfigError(key, "must be > 0");
    return v;
  }
  double non_negative(const std::string& key) const {
    const double v = number(key);
    if (!(v >= 0.0)) throw ConfigError(key, "must be >= 0");
    return v;
  }
  int integer(const std::string& key, int min_value) const {
    const double v = number(key);
    if (v != std::floor(v) || v < min_value || v > 1e9) {
      throw ConfigError(key, "must be an integer >= " + std::to_string(min_value));
    }
    return static_cast<int>(v);
  }
  std::string text(const std::string& key) const {
    const auto* v = std::get_if<std::string>(&t_.at(key));
    if (!v) throw ConfigError(key, "expected a string");
    return *v;
  }
  std::string choice(const std::string& key, std::initializer_list<std::string_view> allowed) const {
    const std::string v = text(key);
    for (std::string_view a : allowed) {
      if (v == a) return v;
    }
    std::string list;
    for (std::string_view a : allowed) list += (list.empty() ? "" : ", ") + std::string(a);
    throw ConfigError(key, "'" + v + "' is not one of: " + list);
  }
  std::vector<double> numbers(const std::string& key) const {
    const auto* v = std::get_if<std::vector<double>>(&t_.at(key));
    if (!v) throw ConfigError(key, "expected a numeric array");
    return *v;
  }

 private:
  const ConfigTable& t_;
};

bool same_kind(const ConfigValue& a, const ConfigValue& b) { return a.index() == b.index(); }

}  // namespace

RunConfig RunConfig::from_table(const ConfigTable& table) {
  ConfigTable merged = default_config();
  for (const auto& [key, value] : table.entries()) {
    if (!merged.contains(key)) throw ConfigError(key, "unknown key");
    if (!same_kind(merged.at(key), value)) {
      throw ConfigError(key, "wrong value type");
    }
    merged.set(key, value);
  }

  const Reader r(merged);
  RunConfig c;
  c.material = {r.positive("material.E"), r.positive("material.L"), r.positive("material.A"),
                r.text("material.temperature_label"), r.number("material.temperature")};
  c.desired = {r.number("desired.sigma_star"), r.number("desired.v_star_left"),
               r.number("desired.v_star_right")};

  LawBlock& law = c.law;
  law.variant = r.choice("law.variant", {"elastic", "norton", "hybrid"});
  law.sigma_ref = r.positive("law.sigma_ref");
  law.exponent = r.number("law.exponent");
  if (!(law.exponent >= 1.0)) throw ConfigError("law.exponent", "must be >= 1");
  law.t_ref = r.positive("law.t_ref");
  law.km_generation = r.non_negative("law.km_generation");
  law.km_annihilation = r.non_negative("law.km_annihilation");
  law.avrami_rate = r.non_negative("law.avrami_rate");
  law.avrami_exponent = r.number("law.avrami_exponent");
  if (!(law.avrami_exponent >= 1.0)) throw ConfigError("law.avrami_exponent", "must be >= 1");
  law.sigma0_lamellar = r.number("law.sigma0_lamellar");
  law.sigma0_globular = r.number("law.sigma0_globular");
  law.taylor_alpha = r.non_negative("law.taylor_alpha");
  law.taylor_factor = r.non_negative("law.taylor_factor");
  law.shear_modulus = r.non_negative("law.shear_modulus");
  law.burgers_vector = r.non_negative("law.burgers_vector");
  law.drag_stress = r.positive("law.drag_stress");
  law.rate_exponent = r.number("law.rate_exponent");
  if (!(law.rate_exponent >= 1.0)) throw ConfigError("law.rate_exponent", "must be >= 1");
  law.flow_t_ref = r.positive("law.flow_t_ref");
  law.initial_globular_fraction = r.number("law.initial_globular_fraction");
  if (!(law.initial_globular_fraction >= 0.0 && law.initial_globular_fraction <= 1.0)) {
    throw ConfigError("law.initial_globular_fraction", "must lie in [0, 1]");
  }
  law.initial_dislocation_density = r.non_negative("law.initial_dislocation_density");
  law.fd_step = r.non_negative("law.fd_step");

  c.solver = {r.choice("solver.scheme", {"linear-riemann", "nonlinear-split"}),
              r.integer("solver.n_cells", 2), r.positive("solver.cfl"),
              r.positive("solver.t_end"), r.integer("solver.record_every", 1)};
  if (c.solver.cfl > 1.0) throw ConfigError("solver.cfl", "must be in (0, 1]");

  c.control = {r.choice("control.law_variant", {"riemann-gain", "coth-closed-form"}),
               r.choice("control.left", {"feedback", "wall"}),
               r.choice("control.right", {"feedback", "wall"})};

  c.lyapunov = {r.choice("lyapunov.mu_hat_policy", {"paper-default", "fixed", "search"}),
                r.non_negative("lyapunov.mu_hat"), r.non_negative("lyapunov.mu_hat_max"),
                r.integer("lyapunov.n_scan", 2), r.integer("lyapunov.n_grid", 2)};

  c.initial = {r.choice("initial.profile", {"uniform", "bump", "zero"}),
               r.number("initial.sigma0"),
               r.number("initial.v0"),
               r.number("initial.bump_sigma"),
               r.number("initial.bump_v"),
               r.number("initial.bump_center"),
               r.positive("initial.bump_width")};

  c.output = {r.text("output.dir"), r.text("output.name")};
  if (c.output.name.empty()) throw ConfigError("output.name", "must not be empty");

  c.sweep = {r.text("sweep.path"), r.numbers("sweep.values")};
  if (!c.sweep.path.empty()) {
    if (!merged.contains(c.sweep.path)) throw ConfigError("sweep.path", "unknown key " + c.sweep.path);
    if (!std::holds_alternative<double>(merged.at(c.sweep.path))) {
      throw ConfigError("sweep.path", c.sweep.path + " is not a scalar numeric key");
    }
  }

  for (double level : r.numbers("refine.levels")) {
    if (level != std::floor(level) || level < 2) {
      throw ConfigError("refine.levels", "levels must be integers >= 2");
    }
    c.refine.levels.push_back(static_cast<int>(level));
  }
  c.refine.t_end = r.non_negative("refine.t_end");
  c.refine.cfl = r.positive("refine.cfl");
  if (c.refine.cfl > 1.0) throw ConfigError("refine.cfl", "must be in (0, 1]");
  c.refine.profile = r.choice("refine.profile", {"bump", "constant"});

  c.resolved = std::move(merged);
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  return from_table(ConfigTable::load(path));
}

RunConfig RunConfig::with_override(const std::string& key, double value) const {
  if (!resolved.contains(key)) throw ConfigError(key, "unknown key");
  if (!std::holds_alternative<double>(resolved.at(key))) {
    throw ConfigError(key, "not a scalar numeric key");
  }
  ConfigTable table = resolved;
  table.set(key, value);
  return from_table(table);
}

}  // namespace formctl
