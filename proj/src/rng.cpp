#include "pdelab/rng.hpp"

#include <iostream>
#include <map>
#include <mutex>
#include <string>

#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>

#include "pdelab/error.hpp"

namespace pdelab {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream_id) {
  std::uint64_t state = seed;
  std::uint64_t a = splitmix64(state);
  state = a ^ (stream_id * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL);
  splitmix64(state);
  return splitmix64(state);
}

Rng::Rng(RngStream stream) : engine_(mix_seed(stream.seed, stream.stream_id)) {}

double Rng::uniform() {
  // 53 random bits, shifted by half an ulp so 0 is never returned.
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() {
  boost::random::normal_distribution<double> dist;
  return dist(engine_);
}

double Rng::gamma(double shape) {
  boost::random::gamma_distribution<double> dist(shape, 1.0);
  return dist(engine_);
}

void Rng::fill_normal(std::span<double> out) {
  boost::random::normal_distribution<double> dist;
  for (double& v : out) v = dist(engine_);
}

void Rng::unit_vector(std::span<double> out) {
  double norm2 = 0.0;
  do {
    fill_normal(out);
    norm2 = squared_norm(out);
  } while (norm2 < 1e-300);
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& v : out) v *= inv;
}

namespace {
std::mutex warn_mutex;
std::map<std::string, long>& warn_counts() {
  static std::map<std::string, long> counts;
  return counts;
}
}  // namespace

void warn(const std::string& key, const std::string& message) {
  std::lock_guard lock(warn_mutex);
  const long n = ++warn_counts()[key];
  if (n <= 3) std::cerr << "warning: " << message << '\n';
  if (n == 3) std::cerr << "warning: further '" << key << "' warnings suppressed\n";
}

long warning_count(const std::string& key) {
  std::lock_guard lock(warn_mutex);
  auto it = warn_counts().find(key);
  return it == warn_counts().end() ? 0 : it->second;
}

}  // namespace pdelab
