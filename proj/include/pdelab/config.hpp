#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "pdelab/bayes_pde.hpp"
#include "pdelab/error.hpp"
#include "pdelab/model.hpp"
#include "pdelab/shrinkage.hpp"

namespace pdelab {

class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// Flat `key = value` configuration with `#` comments. Keys are dotted
/// (model.radial.kind); list values are comma separated.
class Config {
 public:
  struct Entry {
    std::string value;
    int line = 0;  ///< 0 for values set programmatically
  };

  static Config parse(std::string_view text, std::string source = "<config>");

  const std::string& source() const { return source_; }
  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  void set(const std::string& key, std::string value);
  void erase(const std::string& key) { entries_.erase(key); }

  std::string str(const std::string& key) const;
  std::string str_or(const std::string& key, const std::string& def) const;
  double num(const std::string& key) const;
  double num_or(const std::string& key, double def) const;
  long integer(const std::string& key) const;
  long integer_or(const std::string& key, long def) const;
  std::uint64_t u64(const std::string& key) const;
  bool flag_or(const std::string& key, bool def) const;
  std::vector<std::string> list(const std::string& key) const;
  std::vector<std::string> list_or(const std::string& key, const std::vector<std::string>& def) const;
  std::vector<double> num_list(const std::string& key) const;
  std::vector<double> num_list_or(const std::string& key, const std::vector<double>& def) const;

  /// Throws ConfigError naming the first key that no getter has read.
  void check_all_used() const;

  /// One `key = value` line per entry, keys sorted.
  std::string to_text() const;
  const std::map<std::string, Entry>& entries() const { return entries_; }

  /// ConfigError with the key's source line.
  [[noreturn]] void fail(const std::string& key, const std::string& message) const;

 private:
  const Entry& entry(const std::string& key) const;
  std::string source_;
  std::map<std::string, Entry> entries_;
  mutable std::set<std::string> used_;
};

double parse_double(std::string_view text);
std::vector<std::string> split_list(std::string_view text, char sep = ',');
std::string trim(std::string_view text);

/// "normal", "student" (df from model.radial.df) or "discrete" (atoms from
/// model.radial.atoms as scale:weight pairs).
RadialFamily parse_family(const Config& cfg, const std::string& kind);
std::vector<RadialFamily> parse_families(const Config& cfg);

/// model.d, model.k, model.c (first entry when a list), model.eta, model.theta
/// and the first radial family.
ModelSpec model_from_config(const Config& cfg);
std::string model_to_config(const ModelSpec& spec);

/// shrinkage.kind and either shrinkage.a or shrinkage.a_fraction, a multiple
/// of dominance_a_max(c).
ShrinkageSpec parse_shrinkage(const Config& cfg, double c);

/// prior.kind (flat | harmonic | twopoint), prior.a, prior.m.
PriorSpec parse_prior(const Config& cfg, const std::string& kind);

/// log | power:p | reflected:alpha | squared
LossSpec parse_loss(const std::string& text);

}  // namespace pdelab
