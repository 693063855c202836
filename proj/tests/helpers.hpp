#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "kslab/common.hpp"
#include "kslab/frequency.hpp"
#include "kslab/kinetic.hpp"

namespace testing {

inline kslab::KineticState cosine_state(const kslab::FrequencyDensity& g, std::size_t n_theta,
                                        std::size_t n_omega, double K, double a, double center = 0.0) {
  auto s = kslab::KineticState::from_profile(
      kslab::PhaseGrid(n_theta), g.quadrature_nodes(n_omega), K,
      [a, center](double th, double) { return (1.0 + 2.0 * a * std::cos(th - center)) / kslab::kTwoPi; });
  s.set_support_bound(g.support_bound());
  return s;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("kslab_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace testing
