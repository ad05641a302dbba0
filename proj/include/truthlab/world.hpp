#pragma once

// Synthetic truth-correlated worlds. A world is a set of subject ids, a set
// of attribute ids, and a ground-truth map g from subjects to attributes.
// Examples are four-token sequences (x, y, x', y') with one latent truth bit
// per example: a true example states both facts correctly, a false one draws
// both attributes uniformly (coincidental matches allowed; the label is the
// latent bit, not the coincidence).
//
// Id conventions: subject ids are 1..N, attribute ids are N+1..N+M. Toy mode
// means N == M with bijective g.

#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "truthlab/rng.hpp"

namespace truthlab::data {

struct WorldSpec {
  int n_subjects = 0;
  int n_attributes = 0;
  std::vector<int> g;  // g[i] = attribute id for subject id i+1
  std::uint64_t seed = 0;

  bool toy_mode() const { return n_subjects == n_attributes; }
  int vocab_size() const { return n_subjects + n_attributes; }
  bool is_subject(int id) const { return id >= 1 && id <= n_subjects; }
  bool is_attribute(int id) const { return id > n_subjects && id <= vocab_size(); }

  int g_of(int subject_id) const {
    if (!is_subject(subject_id)) throw std::invalid_argument("g_of: subject id out of range");
    return g[subject_id - 1];
  }

  // Inverse of g; toy mode only (g bijective). Requires validate().
  int g_inverse(int attribute_id) const {
    if (!is_attribute(attribute_id)) throw std::invalid_argument("g_inverse: attribute id out of range");
    if (!toy_mode()) throw std::invalid_argument("g_inverse requires toy mode");
    if (static_cast<int>(g_inv_.size()) != n_attributes) throw std::logic_error("g_inverse: world not validated");
    return g_inv_[attribute_id - n_subjects - 1];
  }

  void validate() {
    if (n_subjects < 1 || n_attributes < 1) throw std::invalid_argument("world: vocabulary sizes must be positive");
    if (static_cast<int>(g.size()) != n_subjects) throw std::invalid_argument("world: g must cover every subject id");
    for (int a : g)
      if (a <= n_subjects || a > vocab_size()) throw std::invalid_argument("world: g value outside attribute range");
    g_inv_.assign(n_attributes, 0);
    if (toy_mode()) {
      for (int i = 0; i < n_subjects; ++i) {
        int slot = g[i] - n_subjects - 1;
        if (g_inv_[slot] != 0) throw std::invalid_argument("world: g not bijective in toy mode");
        g_inv_[slot] = i + 1;
      }
    }
  }

 private:
  std::vector<int> g_inv_;
};

// Random world: bijective g (uniform permutation) in toy mode, i.i.d. uniform
// attribute per subject otherwise. g is drawn from the "world_g" stream.
inline WorldSpec make_world(int n_subjects, int n_attributes, std::uint64_t seed) {
  WorldSpec w;
  w.n_subjects = n_subjects;
  w.n_attributes = n_attributes;
  w.seed = seed;
  w.g.resize(n_subjects);
  rng::Counter r(seed, "world_g");
  if (n_subjects == n_attributes) {
    for (int i = 0; i < n_subjects; ++i) w.g[i] = n_subjects + 1 + i;
    for (int i = n_subjects - 1; i > 0; --i) {
      int j = static_cast<int>(r.next_below(static_cast<std::uint64_t>(i) + 1));
      std::swap(w.g[i], w.g[j]);
    }
  } else {
    for (int i = 0; i < n_subjects; ++i)
      w.g[i] = n_subjects + 1 + static_cast<int>(r.next_below(static_cast<std::uint64_t>(n_attributes)));
  }
  w.validate();
  return w;
}

struct Example {
  int x = 0;
  int y = 0;
  int x_prime = 0;
  int y_prime = 0;
  bool truth = false;
};

struct Batch {
  std::vector<Example> examples;
  double rho = 0.0;
  std::uint64_t seed = 0;
};

// Draw order is part of the reproducibility contract: x, x', T, then (y, y')
// only on the false branch.
inline Example sample_example(const WorldSpec& world, double rho, rng::Counter& rng) {
  if (rho < 0.0 || rho > 1.0) throw std::invalid_argument("sample_example: rho outside [0,1]");
  Example e;
  e.x = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(world.n_subjects)));
  e.x_prime = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(world.n_subjects)));
  e.truth = rng.next_bernoulli(rho);
  if (e.truth) {
    e.y = world.g_of(e.x);
    e.y_prime = world.g_of(e.x_prime);
  } else {
    e.y = world.n_subjects + 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(world.n_attributes)));
    e.y_prime = world.n_subjects + 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(world.n_attributes)));
  }
  return e;
}

inline Batch sample_batch(const WorldSpec& world, double rho, int size, rng::Counter& rng, std::uint64_t seed = 0) {
  Batch b;
  b.rho = rho;
  b.seed = seed;
  b.examples.reserve(size);
  for (int i = 0; i < size; ++i) b.examples.push_back(sample_example(world, rho, rng));
  return b;
}

// Forced-truth variant of sample_example (same draw order, no Bernoulli).
inline Example sample_example_forced(const WorldSpec& world, bool truth, rng::Counter& rng) {
  Example e;
  e.x = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(world.n_subjects)));
  e.x_prime = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(world.n_subjects)));
  e.truth = truth;
  if (truth) {
    e.y = world.g_of(e.x);
    e.y_prime = world.g_of(e.x_prime);
  } else {
    e.y = world.n_subjects + 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(world.n_attributes)));
    e.y_prime = world.n_subjects + 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(world.n_attributes)));
  }
  return e;
}

// Exactly size/2 true then size/2 false examples. Construction ignores rho.
inline Batch make_balanced_probe_set(const WorldSpec& world, int size, rng::Counter& rng) {
  if (size % 2 != 0) throw std::invalid_argument("make_balanced_probe_set: size must be even");
  Batch b;
  b.rho = 0.5;
  b.examples.reserve(size);
  for (int i = 0; i < size / 2; ++i) b.examples.push_back(sample_example_forced(world, true, rng));
  for (int i = 0; i < size / 2; ++i) b.examples.push_back(sample_example_forced(world, false, rng));
  return b;
}

// P(y' = a | x') marginalized over T: rho + (1-rho)/|A| at a = g(x'),
// (1-rho)/|A| elsewhere. Indexed by attribute order (a = N+1+i).
inline std::vector<double> oracle_conditional(const WorldSpec& world, double rho, int x_prime) {
  if (!world.is_subject(x_prime)) throw std::invalid_argument("oracle_conditional: invalid subject id");
  if (rho < 0.0 || rho > 1.0) throw std::invalid_argument("oracle_conditional: rho outside [0,1]");
  std::vector<double> p(world.n_attributes, (1.0 - rho) / world.n_attributes);
  p[world.g_of(x_prime) - world.n_subjects - 1] += rho;
  return p;
}

inline nlohmann::json world_to_json(const WorldSpec& w) {
  return nlohmann::json{{"n_subjects", w.n_subjects},
                        {"n_attributes", w.n_attributes},
                        {"g", w.g},
                        {"seed", w.seed}};
}

inline WorldSpec world_from_json(const nlohmann::json& j) {
  WorldSpec w;
  w.n_subjects = j.at("n_subjects").get<int>();
  w.n_attributes = j.at("n_attributes").get<int>();
  w.g = j.at("g").get<std::vector<int>>();
  w.seed = j.at("seed").get<std::uint64_t>();
  w.validate();
  return w;
}

inline void write_batch_csv(std::ostream& os, const Batch& b) {
  os << "x,y,x_prime,y_prime,truth\n";
  for (const Example& e : b.examples)
    os << e.x << ',' << e.y << ',' << e.x_prime << ',' << e.y_prime << ',' << (e.truth ? 1 : 0) << '\n';
}

}  // namespace truthlab::data
