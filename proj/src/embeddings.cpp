#include "geomort/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "geomort/csv.hpp"
#include "geomort/error.hpp"
#include "geomort/rng.hpp"

namespace geomort {

AffinityGraph build_affinity(const Eigen::MatrixXd& embeddings, int m, double sigma) {
  const int n = static_cast<int>(embeddings.rows());
  if (m < 1) throw DomainError("neighbor count must be >= 1");
  if (n < m + 1) throw DomainError("need at least m+1 rows for an m-NN graph");
  if (embeddings.cols() < 1) throw DomainError("embeddings need >= 1 dimension");

  // Pairwise squared distances via the Gram trick.
  const Eigen::VectorXd sq = embeddings.rowwise().squaredNorm();
  Eigen::MatrixXd d2 = sq.replicate(1, n) + sq.transpose().replicate(n, 1) -
                       2.0 * embeddings * embeddings.transpose();
  d2 = d2.cwiseMax(0.0);

  // m nearest neighbors per row (self excluded), union-symmetrized.
  Eigen::MatrixXd mask = Eigen::MatrixXd::Zero(n, n);
  std::vector<double> neighbor_d2;
  neighbor_d2.reserve(static_cast<std::size_t>(n) * m);
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) order[j] = j;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (d2(i, a) != d2(i, b)) return d2(i, a) < d2(i, b);
      return a < b;
    });
    int taken = 0;
    for (int j : order) {
      if (j == i) continue;
      mask(i, j) = 1.0;
      mask(j, i) = 1.0;
      neighbor_d2.push_back(d2(i, j));
      if (++taken == m) break;
    }
  }

  AffinityGraph g;
  g.neighbors = m;
  if (sigma > 0.0) {
    g.sigma = sigma;
  } else {
    std::vector<double> nonzero;
    for (double v : neighbor_d2)
      if (v > 0.0) nonzero.push_back(std::sqrt(v));
    if (nonzero.empty())
      throw DomainError("auto bandwidth failed: all neighbor distances are zero");
    std::sort(nonzero.begin(), nonzero.end());
    const std::size_t h = nonzero.size() / 2;
    g.sigma = nonzero.size() % 2 == 1 ? nonzero[h] : 0.5 * (nonzero[h - 1] + nonzero[h]);
  }

  g.w = Eigen::MatrixXd::Zero(n, n);
  const double inv = 1.0 / (2.0 * g.sigma * g.sigma);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (mask(i, j) != 0.0) {
        const double w = std::exp(-d2(i, j) * inv);
        g.w(i, j) = w;
        g.w(j, i) = w;
      }
  return g;
}

void jacobi_eigensymm(const Eigen::MatrixXd& a_in, Eigen::VectorXd& eigenvalues,
                      Eigen::MatrixXd& eigenvectors, double tol) {
  const int n = static_cast<int>(a_in.rows());
  if (a_in.cols() != n) throw DomainError("jacobi: matrix must be square");
  Eigen::MatrixXd a = 0.5 * (a_in + a_in.transpose());  // enforce symmetry
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);

  auto off_norm = [&]() {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) s += a(i, j) * a(i, j);
    return std::sqrt(2.0 * s);
  };

  const int max_sweeps = 100;
  for (int sweep = 0; sweep < max_sweeps && off_norm() > tol; ++sweep) {
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::fabs(apq) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int i = 0; i < n; ++i) {
          const double aip = a(i, p), aiq = a(i, q);
          a(i, p) = c * aip - s * aiq;
          a(i, q) = s * aip + c * aiq;
        }
        for (int i = 0; i < n; ++i) {
          const double api = a(p, i), aqi = a(q, i);
          a(p, i) = c * api - s * aqi;
          a(q, i) = s * api + c * aqi;
        }
        for (int i = 0; i < n; ++i) {
          const double vip = v(i, p), viq = v(i, q);
          v(i, p) = c * vip - s * viq;
          v(i, q) = s * vip + c * viq;
        }
      }
    }
  }

  // Ascending eigenvalue order, canonical signs.
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int x, int y) {
    if (a(x, x) != a(y, y)) return a(x, x) < a(y, y);
    return x < y;
  });
  eigenvalues.resize(n);
  eigenvectors.resize(n, n);
  for (int j = 0; j < n; ++j) {
    eigenvalues(j) = a(order[j], order[j]);
    eigenvectors.col(j) = v.col(order[j]);
    int imax = 0;
    double best = -1.0;
    for (int i = 0; i < n; ++i) {
      const double m = std::fabs(eigenvectors(i, j));
      if (m > best + 1e-15) {
        best = m;
        imax = i;
      }
    }
    if (eigenvectors(imax, j) < 0.0) eigenvectors.col(j) = -eigenvectors.col(j);
  }
}

Eigen::MatrixXd normalized_laplacian(const AffinityGraph& graph) {
  const int n = graph.n();
  Eigen::VectorXd deg = graph.w.rowwise().sum();
  for (int i = 0; i < n; ++i)
    if (!(deg(i) > 0.0)) throw DomainError("isolated node in affinity graph");
  const Eigen::VectorXd dinv_sqrt = deg.array().rsqrt();
  Eigen::MatrixXd l = -(dinv_sqrt.asDiagonal() * graph.w * dinv_sqrt.asDiagonal());
  l.diagonal().array() += 1.0;
  return l;
}

KMeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed,
                    int restarts, int max_iter) {
  const int n = static_cast<int>(points.rows());
  const int d = static_cast<int>(points.cols());
  if (k < 1) throw DomainError("k must be >= 1");
  if (k > n) throw DomainError("k exceeds point count");

  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();

  for (int run = 0; run < restarts; ++run) {
    CounterRng rng(mix64(seed ^ (0x6B6D65616E73ULL + run)));

    // k-means++ seeding.
    Eigen::MatrixXd centers(k, d);
    std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
    centers.row(0) = points.row(static_cast<int>(rng.uniform_int(n)));
    for (int c = 1; c < k; ++c) {
      double total = 0.0;
      for (int i = 0; i < n; ++i) {
        const double dd = (points.row(i) - centers.row(c - 1)).squaredNorm();
        if (dd < min_d2[i]) min_d2[i] = dd;
        total += min_d2[i];
      }
      int pick = 0;
      if (total > 0.0) {
        const double target = rng.uniform() * total;
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
          acc += min_d2[i];
          if (acc >= target) {
            pick = i;
            break;
          }
        }
      } else {
        pick = static_cast<int>(rng.uniform_int(n));
      }
      centers.row(c) = points.row(pick);
    }

    std::vector<int> labels(n, 0);
    for (int iter = 0; iter < max_iter; ++iter) {
      bool changed = false;
      for (int i = 0; i < n; ++i) {
        int bestc = 0;
        double bestd = (points.row(i) - centers.row(0)).squaredNorm();
        for (int c = 1; c < k; ++c) {
          const double dd = (points.row(i) - centers.row(c)).squaredNorm();
          if (dd < bestd) {
            bestd = dd;
            bestc = c;
          }
        }
        if (labels[i] != bestc) {
          labels[i] = bestc;
          changed = true;
        }
      }
      Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, d);
      std::vector<int> counts(k, 0);
      for (int i = 0; i < n; ++i) {
        sums.row(labels[i]) += points.row(i);
        ++counts[labels[i]];
      }
      for (int c = 0; c < k; ++c)
        if (counts[c] > 0) centers.row(c) = sums.row(c) / counts[c];
      if (!changed && iter > 0) break;
    }

    double inertia = 0.0;
    for (int i = 0; i < n; ++i)
      inertia += (points.row(i) - centers.row(labels[i])).squaredNorm();
    if (inertia < best.inertia) {
      best.inertia = inertia;
      best.labels = labels;
      best.centroids = centers;
    }
  }
  return best;
}

namespace {

Eigen::MatrixXd laplacian_eigvecs(const AffinityGraph& graph, int k,
                                  Eigen::VectorXd* eigenvalues = nullptr) {
  if (k > graph.n()) throw DomainError("k exceeds node count");
  const Eigen::MatrixXd l = normalized_laplacian(graph);
  Eigen::VectorXd evals;
  Eigen::MatrixXd evecs;
  jacobi_eigensymm(l, evals, evecs, 1e-10);
  if (eigenvalues) *eigenvalues = evals.head(k);
  return evecs.leftCols(k);
}

}  // namespace

ClusterAssignment spectral_cluster(const AffinityGraph& graph, int k, std::uint64_t seed) {
  if (k < 1) throw DomainError("k must be >= 1");
  if (k > graph.n()) throw DomainError("k exceeds node count");
  Eigen::MatrixXd u = laplacian_eigvecs(graph, k);
  for (int i = 0; i < u.rows(); ++i) {
    const double norm = u.row(i).norm();
    if (norm > 0.0) u.row(i) /= norm;
  }

  // Retry with a reseeded k-means when a cluster comes back empty.
  for (int attempt = 0; attempt < 3; ++attempt) {
    const KMeansResult km = kmeans(u, k, seed + attempt, 10, 100);
    std::vector<int> counts(k, 0);
    for (int l : km.labels) ++counts[l];
    if (std::all_of(counts.begin(), counts.end(), [](int c) { return c > 0; })) {
      ClusterAssignment a;
      a.labels = km.labels;
      a.k = k;
      return a;
    }
  }
  throw DomainError("spectral clustering produced an empty cluster");
}

Eigen::MatrixXd spectral_embed_2d(const AffinityGraph& graph) {
  const Eigen::MatrixXd u = laplacian_eigvecs(graph, 3);
  Eigen::MatrixXd coords = u.rightCols(2);  // skip the trivial eigenvector
  for (int j = 0; j < 2; ++j) {
    const double mean = coords.col(j).mean();
    const double var = (coords.col(j).array() - mean).square().sum() / coords.rows();
    if (var > 0.0) coords.col(j) /= std::sqrt(var);
  }
  return coords;
}

std::vector<ClusterSummary> summarize_clusters(const ClusterAssignment& assignment,
                                               const std::vector<TileKey>& provenance,
                                               const std::vector<CountyRecord>& counties) {
  if (assignment.labels.size() != provenance.size())
    throw DomainError("assignment/provenance length mismatch");
  std::map<std::string, const CountyRecord*> by_fips;
  for (const auto& c : counties) by_fips[c.fips] = &c;

  std::vector<ClusterSummary> out(assignment.k);
  for (int c = 0; c < assignment.k; ++c) {
    out[c].cluster = c;
    out[c].region_fraction.assign(kRegionCount, 0.0);
  }
  for (std::size_t i = 0; i < provenance.size(); ++i) {
    const auto it = by_fips.find(provenance[i].fips);
    if (it == by_fips.end())
      throw DomainError("image " + provenance[i].str() + " references unknown county");
    const CountyRecord& rec = *it->second;
    ClusterSummary& s = out[assignment.labels[i]];
    ++s.image_count;
    s.mean_mortality += crude_rate(rec);
    s.mean_income += rec.income;
    s.mean_any_college += rec.any_college;
    s.mean_age += rec.mean_age;
    s.mean_prop_hispanic += rec.prop_hispanic;
    s.mean_population += static_cast<double>(rec.population);
    s.region_fraction[rec.region - 1] += 1.0;
  }
  for (auto& s : out) {
    if (s.image_count == 0) continue;
    const double inv = 1.0 / static_cast<double>(s.image_count);
    s.mean_mortality *= inv;
    s.mean_income *= inv;
    s.mean_any_college *= inv;
    s.mean_age *= inv;
    s.mean_prop_hispanic *= inv;
    s.mean_population *= inv;
    for (double& f : s.region_fraction) f *= inv;
  }
  return out;
}

void write_assignment(std::ostream& out, const ClusterAssignment& assignment,
                      const std::vector<TileKey>& provenance) {
  out << "fips,school,row,col,cluster\n";
  for (std::size_t i = 0; i < provenance.size(); ++i) {
    const TileKey& k = provenance[i];
    out << csv_quote(k.fips) << ',' << k.school << ',' << k.row << ',' << k.col << ','
        << assignment.labels[i] << '\n';
  }
}

void write_cluster_summaries(std::ostream& out, const std::vector<ClusterSummary>& summaries) {
  out << "cluster,image_count,mean_mortality,mean_income_thousands,"
         "mean_any_college,mean_age,mean_prop_hispanic,mean_population_thousands";
  for (int r = 1; r <= kRegionCount; ++r) out << ",region" << r;
  out << '\n';
  char buf[64];
  for (const auto& s : summaries) {
    out << s.cluster << ',' << s.image_count;
    std::snprintf(buf, sizeof(buf), ",%.4f", s.mean_mortality);
    out << buf;
    out << ',' << std::llround(s.mean_income / 1000.0);
    std::snprintf(buf, sizeof(buf), ",%.4f,%.4f,%.4f", s.mean_any_college, s.mean_age,
                  s.mean_prop_hispanic);
    out << buf;
    out << ',' << std::llround(s.mean_population / 1000.0);
    for (double f : s.region_fraction) {
      std::snprintf(buf, sizeof(buf), ",%.4f", f);
      out << buf;
    }
    out << '\n';
  }
}

void write_coords(std::ostream& out, const Eigen::MatrixXd& coords,
                  const std::vector<TileKey>& provenance) {
  if (coords.rows() != static_cast<Eigen::Index>(provenance.size()))
    throw DomainError("coords/provenance length mismatch");
  out << "fips,school,row,col,x,y\n";
  char buf[64];
  for (std::size_t i = 0; i < provenance.size(); ++i) {
    const TileKey& k = provenance[i];
    std::snprintf(buf, sizeof(buf), "%.7g,%.7g", coords(static_cast<int>(i), 0),
                  coords(static_cast<int>(i), 1));
    out << csv_quote(k.fips) << ',' << k.school << ',' << k.row << ',' << k.col << ','
        << buf << '\n';
  }
}

}  // namespace geomort
