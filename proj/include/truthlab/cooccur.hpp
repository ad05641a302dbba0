#pragma once

// Document-grouped co-occurrence statistics over binary labels: corpus false
// rate, same-document pairwise false probability, clustering ratio, and a
// Pearson chi-square independence test with an exact-precision regularized
// incomplete gamma for the p-value.

#include <cmath>
#include <istream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace truthlab::cooccur {

struct Document {
  std::string doc_id;
  long long n = 0;  // mentions
  long long f = 0;  // certain-false mentions
};

struct Corpus {
  std::vector<Document> docs;
};

namespace detail {

constexpr double kMachEps = 1.11022302462515654042e-16;
constexpr double kBig = 4.503599627370496e15;
constexpr double kBigInv = 2.22044604925031308085e-16;
constexpr double kMaxLog = 709.782712893384;

// Regularized upper incomplete gamma Q(a, x) by continued fraction.
inline double igamc(double a, double x);

// Regularized lower incomplete gamma P(a, x) by power series.
inline double igam(double a, double x) {
  if (a <= 0.0) throw std::invalid_argument("igam: a must be > 0");
  if (x < 0.0) throw std::invalid_argument("igam: x must be >= 0");
  if (x == 0.0) return 0.0;
  if (x > 1.0 && x > a) return 1.0 - igamc(a, x);
  double ax = a * std::log(x) - x - std::lgamma(a);
  if (ax < -kMaxLog) return 0.0;
  ax = std::exp(ax);
  double r = a, c = 1.0, ans = 1.0;
  do {
    r += 1.0;
    c *= x / r;
    ans += c;
  } while (c / ans > kMachEps);
  return ans * ax / a;
}

inline double igamc(double a, double x) {
  if (a <= 0.0) throw std::invalid_argument("igamc: a must be > 0");
  if (x < 0.0) throw std::invalid_argument("igamc: x must be >= 0");
  if (x < 1.0 || x < a) return 1.0 - igam(a, x);
  double ax = a * std::log(x) - x - std::lgamma(a);
  if (ax < -kMaxLog) return 0.0;
  ax = std::exp(ax);
  double y = 1.0 - a;
  double z = x + y + 1.0;
  double c = 0.0;
  double pkm2 = 1.0, qkm2 = x;
  double pkm1 = x + 1.0, qkm1 = z * x;
  double ans = pkm1 / qkm1;
  double t;
  do {
    c += 1.0;
    y += 1.0;
    z += 2.0;
    double yc = y * c;
    double pk = pkm1 * z - pkm2 * yc;
    double qk = qkm1 * z - qkm2 * yc;
    if (qk != 0.0) {
      double r = pk / qk;
      t = std::abs((ans - r) / r);
      ans = r;
    } else {
      t = 1.0;
    }
    pkm2 = pkm1;
    pkm1 = pk;
    qkm2 = qkm1;
    qkm1 = qk;
    if (std::abs(pk) > kBig) {
      pkm2 *= kBigInv;
      pkm1 *= kBigInv;
      qkm2 *= kBigInv;
      qkm1 *= kBigInv;
    }
  } while (t > kMachEps);
  return ans * ax;
}

inline double choose2(long long n) { return 0.5 * static_cast<double>(n) * static_cast<double>(n - 1); }

}  // namespace detail

inline void validate(const Corpus& corpus) {
  for (const Document& d : corpus.docs)
    if (d.n < 0 || d.f < 0 || d.f > d.n)
      throw std::invalid_argument("corpus: document " + d.doc_id + " violates 0 <= f <= n");
}

struct CorpusStats {
  double p = 0.0;                      // corpus certain-false rate
  double pairwise_false = 0.0;         // same-document pair probability
  double independence_baseline = 0.0;  // p^2
  double clustering_ratio = 0.0;       // observed over binomial variance
  long long n_docs = 0;
  long long n_multi_docs = 0;          // documents with n >= 2
  long long n_mentions = 0;
};

inline CorpusStats corpus_stats(const Corpus& corpus) {
  validate(corpus);
  CorpusStats st;
  st.n_docs = static_cast<long long>(corpus.docs.size());
  double f_total = 0.0, n_total = 0.0, pair_f = 0.0, pair_n = 0.0;
  for (const Document& d : corpus.docs) {
    f_total += static_cast<double>(d.f);
    n_total += static_cast<double>(d.n);
    if (d.n >= 2) {
      pair_f += detail::choose2(d.f);
      pair_n += detail::choose2(d.n);
      ++st.n_multi_docs;
    }
  }
  if (n_total == 0.0) throw std::invalid_argument("corpus_stats: empty corpus");
  if (pair_n == 0.0) throw std::invalid_argument("corpus_stats: no document has two mentions");
  st.n_mentions = static_cast<long long>(n_total);
  st.p = f_total / n_total;
  st.pairwise_false = pair_f / pair_n;
  st.independence_baseline = st.p * st.p;
  if (st.p <= 0.0 || st.p >= 1.0)
    throw std::invalid_argument("corpus_stats: clustering ratio undefined at p = 0 or 1");
  double num = 0.0, den = 0.0;
  long long m = 0;
  for (const Document& d : corpus.docs) {
    if (d.n < 2) continue;  // single-mention docs carry no within-document signal
    double phat = static_cast<double>(d.f) / static_cast<double>(d.n);
    num += (phat - st.p) * (phat - st.p);
    den += st.p * (1.0 - st.p) / static_cast<double>(d.n);
    ++m;
  }
  st.clustering_ratio = (num / static_cast<double>(m)) / (den / static_cast<double>(m));
  return st;
}

struct Chi2Result {
  double chi2 = 0.0;
  long long dof = 0;
  double p_value = 1.0;
};

// Pearson chi-square on the 2 x M table {f_i, n_i - f_i}, dof = M - 1,
// p-value = Q(dof/2, chi2/2). Documents with n = 0 carry no cells.
inline Chi2Result chi2_independence(const Corpus& corpus) {
  validate(corpus);
  double f_total = 0.0, n_total = 0.0;
  long long m = 0;
  for (const Document& d : corpus.docs) {
    if (d.n == 0) continue;
    f_total += static_cast<double>(d.f);
    n_total += static_cast<double>(d.n);
    ++m;
  }
  if (m < 2) throw std::invalid_argument("chi2_independence: needs at least two nonempty documents");
  double p = f_total / n_total;
  if (p <= 0.0 || p >= 1.0)
    throw std::invalid_argument("chi2_independence: a zero row marginal makes the test undefined");
  Chi2Result r;
  for (const Document& d : corpus.docs) {
    if (d.n == 0) continue;
    double ef = static_cast<double>(d.n) * p;
    double et = static_cast<double>(d.n) * (1.0 - p);
    double df = static_cast<double>(d.f) - ef;
    double dt = static_cast<double>(d.n - d.f) - et;
    r.chi2 += df * df / ef + dt * dt / et;
  }
  r.dof = m - 1;
  r.p_value = detail::igamc(static_cast<double>(r.dof) / 2.0, r.chi2 / 2.0);
  return r;
}

// JSONL loader; each line is either {doc_id, labels: [0/1, ...]} with
// 1 = certain-false, or pre-aggregated {doc_id, n, f}.
inline Corpus read_corpus_jsonl(std::istream& in) {
  Corpus corpus;
  std::string line;
  long long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const std::exception& e) {
      throw std::invalid_argument("corpus line " + std::to_string(lineno) + ": " + e.what());
    }
    Document d;
    d.doc_id = j.value("doc_id", "line" + std::to_string(lineno));
    if (j.contains("labels")) {
      for (const auto& v : j["labels"]) {
        long long label = v.get<long long>();
        if (label != 0 && label != 1)
          throw std::invalid_argument("corpus line " + std::to_string(lineno) + ": labels must be 0/1");
        ++d.n;
        d.f += label;
      }
    } else if (j.contains("n") && j.contains("f")) {
      d.n = j["n"].get<long long>();
      d.f = j["f"].get<long long>();
    } else {
      throw std::invalid_argument("corpus line " + std::to_string(lineno) +
                                  ": expected labels or {n, f}");
    }
    corpus.docs.push_back(std::move(d));
  }
  validate(corpus);
  return corpus;
}

inline nlohmann::json report_json(const CorpusStats& st, const Chi2Result& chi) {
  return nlohmann::json{{"p", st.p},
                        {"pairwise", st.pairwise_false},
                        {"baseline", st.independence_baseline},
                        {"ratio", st.clustering_ratio},
                        {"chi2", chi.chi2},
                        {"dof", chi.dof},
                        {"p_value", chi.p_value},
                        {"n_docs", st.n_docs},
                        {"n_multi_docs", st.n_multi_docs},
                        {"n_mentions", st.n_mentions}};
}

}  // namespace truthlab::cooccur
