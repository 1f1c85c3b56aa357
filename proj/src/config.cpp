#include "pdelab/config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <sstream>

namespace pdelab {

namespace {

bool valid_key(std::string_view key) {
  if (key.empty()) return false;
  for (char ch : key) {
    const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= '0' && ch <= '9') || ch == '_' || ch == '.' || ch == '-';
    if (!ok) return false;
  }
  return key.front() != '.' && key.back() != '.';
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string trim(std::string_view text) {
  std::size_t b = 0;
  std::size_t e = text.size();
  while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
  return std::string(text.substr(b, e - b));
}

std::vector<std::string> split_list(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(sep, start);
    const std::string item = trim(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (!item.empty()) out.push_back(item);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(std::string_view text) {
  const std::string s = trim(text);
  if (s.empty()) throw InvalidArgument("expected a number, got an empty value");
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v)) {
    throw InvalidArgument("expected a finite number, got '" + s + "'");
  }
  return v;
}

Config Config::parse(std::string_view text, std::string source) {
  Config cfg;
  cfg.source_ = std::move(source);
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    ++line_no;
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    if (const std::size_t hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const std::size_t eq = body.find('=');
    std::ostringstream where;
    where << "config " << cfg.source_ << " line " << line_no << ": ";
    if (eq == std::string::npos) throw ConfigError(where.str() + "expected 'key = value', got '" + body + "'");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (!valid_key(key)) throw ConfigError(where.str() + "invalid key '" + key + "'");
    if (cfg.entries_.count(key)) {
      throw ConfigError(where.str() + "key '" + key + "' repeats line " + std::to_string(cfg.entries_[key].line));
    }
    if (value.empty()) throw ConfigError(where.str() + "key '" + key + "' has an empty value");
    cfg.entries_[key] = Entry{value, line_no};
  }
  return cfg;
}

void Config::set(const std::string& key, std::string value) {
  if (!valid_key(key)) throw ConfigError("config: invalid key '" + key + "'");
  entries_[key] = Entry{std::move(value), 0};
}

void Config::fail(const std::string& key, const std::string& message) const {
  std::ostringstream os;
  os << "config " << source_;
  if (auto it = entries_.find(key); it != entries_.end() && it->second.line > 0) os << " line " << it->second.line;
  os << ": key '" << key << "': " << message;
  throw ConfigError(os.str());
}

const Config::Entry& Config::entry(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("config " + source_ + ": missing required key '" + key + "'");
  used_.insert(key);
  return it->second;
}

std::string Config::str(const std::string& key) const { return entry(key).value; }

std::string Config::str_or(const std::string& key, const std::string& def) const {
  return has(key) ? str(key) : def;
}

double Config::num(const std::string& key) const {
  const Entry& e = entry(key);
  try {
    return parse_double(e.value);
  } catch (const InvalidArgument& ex) {
    fail(key, ex.what());
  }
}

double Config::num_or(const std::string& key, double def) const { return has(key) ? num(key) : def; }

long Config::integer(const std::string& key) const {
  const double v = num(key);
  if (v != std::floor(v) || std::abs(v) > 9e15) fail(key, "expected an integer");
  return static_cast<long>(v);
}

long Config::integer_or(const std::string& key, long def) const { return has(key) ? integer(key) : def; }

std::uint64_t Config::u64(const std::string& key) const {
  const std::string s = trim(entry(key).value);
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || s[0] == '-' || end != s.c_str() + s.size() || errno == ERANGE) {
    fail(key, "expected an unsigned 64-bit integer, got '" + s + "'");
  }
  return static_cast<std::uint64_t>(v);
}

bool Config::flag_or(const std::string& key, bool def) const {
  if (!has(key)) return def;
  const std::string v = str(key);
  if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
  if (v == "false" || v == "no" || v == "0" || v == "off") return false;
  fail(key, "expected true or false, got '" + v + "'");
}

std::vector<std::string> Config::list(const std::string& key) const {
  std::vector<std::string> out = split_list(entry(key).value);
  if (out.empty()) fail(key, "expected a non-empty list");
  return out;
}

std::vector<std::string> Config::list_or(const std::string& key, const std::vector<std::string>& def) const {
  return has(key) ? list(key) : def;
}

std::vector<double> Config::num_list(const std::string& key) const {
  std::vector<double> out;
  for (const std::string& item : list(key)) {
    try {
      out.push_back(parse_double(item));
    } catch (const InvalidArgument& ex) {
      fail(key, ex.what());
    }
  }
  return out;
}

std::vector<double> Config::num_list_or(const std::string& key, const std::vector<double>& def) const {
  return has(key) ? num_list(key) : def;
}

void Config::check_all_used() const {
  for (const auto& [key, e] : entries_) {
    if (!used_.count(key)) fail(key, "unknown key");
  }
}

std::string Config::to_text() const {
  std::string out;
  for (const auto& [key, e] : entries_) out += key + " = " + e.value + "\n";
  return out;
}

RadialFamily parse_family(const Config& cfg, const std::string& kind) {
  if (kind == "normal") return NormalRadial{};
  if (kind == "student") {
    const double df = cfg.num("model.radial.df");
    if (!(df > 0.0)) cfg.fail("model.radial.df", "degrees of freedom must be > 0");
    return StudentRadial{df};
  }
  if (kind == "discrete") {
    DiscreteRadial m;
    for (const std::string& item : cfg.list("model.radial.atoms")) {
      const std::vector<std::string> parts = split_list(item, ':');
      if (parts.size() != 2) cfg.fail("model.radial.atoms", "expected scale:weight pairs, got '" + item + "'");
      try {
        m.atoms.push_back(MixtureAtom{parse_double(parts[0]), parse_double(parts[1])});
      } catch (const InvalidArgument& ex) {
        cfg.fail("model.radial.atoms", ex.what());
      }
    }
    try {
      validate(RadialFamily(m));
    } catch (const InvalidArgument& ex) {
      cfg.fail("model.radial.atoms", ex.what());
    }
    return m;
  }
  cfg.fail("model.radial.kind", "unknown radial family '" + kind + "' (normal, student, discrete)");
}

std::vector<RadialFamily> parse_families(const Config& cfg) {
  std::vector<RadialFamily> out;
  for (const std::string& kind : cfg.list_or("model.radial.kind", {"normal"})) out.push_back(parse_family(cfg, kind));
  return out;
}

ModelSpec model_from_config(const Config& cfg) {
  ModelSpec spec;
  spec.d = static_cast<int>(cfg.integer("model.d"));
  spec.k = static_cast<int>(cfg.integer("model.k"));
  spec.c = cfg.num_list_or("model.c", {1.0}).front();
  spec.eta = cfg.num_or("model.eta", 1.0);
  if (spec.d < 1) cfg.fail("model.d", "must be >= 1");
  if (spec.k < 1) cfg.fail("model.k", "must be >= 1");
  spec.theta = cfg.num_list_or("model.theta", Vec(static_cast<std::size_t>(spec.d), 0.0));
  if (spec.theta.size() != static_cast<std::size_t>(spec.d)) cfg.fail("model.theta", "must have d coordinates");
  spec.radial = parse_families(cfg).front();
  try {
    validate(spec);
  } catch (const InvalidArgument& ex) {
    throw ConfigError("config " + cfg.source() + ": " + ex.what());
  }
  return spec;
}

std::string model_to_config(const ModelSpec& spec) {
  std::ostringstream os;
  os << "model.d = " << spec.d << "\n";
  os << "model.k = " << spec.k << "\n";
  os << "model.c = " << format_double(spec.c) << "\n";
  os << "model.eta = " << format_double(spec.eta) << "\n";
  os << "model.theta = ";
  for (std::size_t i = 0; i < spec.theta.size(); ++i) os << (i ? ", " : "") << format_double(spec.theta[i]);
  os << "\n";
  if (std::holds_alternative<NormalRadial>(spec.radial)) {
    os << "model.radial.kind = normal\n";
  } else if (const auto* s = std::get_if<StudentRadial>(&spec.radial)) {
    os << "model.radial.kind = student\nmodel.radial.df = " << format_double(s->df) << "\n";
  } else if (const auto* m = std::get_if<DiscreteRadial>(&spec.radial)) {
    os << "model.radial.kind = discrete\nmodel.radial.atoms = ";
    for (std::size_t i = 0; i < m->atoms.size(); ++i) {
      os << (i ? ", " : "") << format_double(m->atoms[i].scale) << ":" << format_double(m->atoms[i].weight);
    }
    os << "\n";
  } else {
    throw InvalidArgument("model_to_config: numeric radial profiles cannot be serialized");
  }
  return os.str();
}

ShrinkageSpec parse_shrinkage(const Config& cfg, double c) {
  ShrinkageSpec s;
  const std::string kind = cfg.str_or("shrinkage.kind", "james-stein");
  if (kind == "james-stein") {
    s.field = JamesStein{};
  } else if (kind == "positive-part") {
    s.field = PositivePart{};
  } else {
    cfg.fail("shrinkage.kind", "unknown shrinkage '" + kind + "' (james-stein, positive-part)");
  }
  if (cfg.has("shrinkage.a") && cfg.has("shrinkage.a_fraction")) {
    cfg.fail("shrinkage.a", "give either shrinkage.a or shrinkage.a_fraction, not both");
  }
  s.a = cfg.has("shrinkage.a") ? cfg.num("shrinkage.a") : cfg.num_or("shrinkage.a_fraction", 0.5) * dominance_a_max(c);
  if (!(s.a > 0.0)) cfg.fail(cfg.has("shrinkage.a") ? "shrinkage.a" : "shrinkage.a_fraction", "shrinkage constant must be > 0");
  return s;
}

PriorSpec parse_prior(const Config& cfg, const std::string& kind) {
  PriorSpec p;
  p.a = cfg.num_or("prior.a", -1.0);
  if (kind == "flat") {
    p.pi1 = FlatPrior{};
  } else if (kind == "harmonic") {
    p.pi1 = HarmonicPrior{};
  } else if (kind == "twopoint") {
    const double m = cfg.num("prior.m");
    if (!(m > 0.0)) cfg.fail("prior.m", "must be > 0");
    p.pi1 = TwoPointPrior{m};
  } else {
    cfg.fail("prior.kind", "unknown prior '" + kind + "' (flat, harmonic, twopoint)");
  }
  return p;
}

LossSpec parse_loss(const std::string& text) {
  const std::vector<std::string> parts = split_list(text, ':');
  if (parts.empty()) throw InvalidArgument("empty loss");
  const std::string& kind = parts[0];
  LossSpec l;
  if (kind == "log" && parts.size() == 1) {
    l = LogLoss{};
  } else if (kind == "squared" && parts.size() == 1) {
    l = SquaredErrorLoss{};
  } else if (kind == "power" && parts.size() == 2) {
    l = PowerLoss{parse_double(parts[1])};
  } else if (kind == "reflected" && parts.size() == 2) {
    l = ReflectedNormalLoss{parse_double(parts[1])};
  } else {
    throw InvalidArgument("unknown loss '" + text + "' (log, power:p, reflected:alpha, squared)");
  }
  validate(l);
  return l;
}

}  // namespace pdelab
