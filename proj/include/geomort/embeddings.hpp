#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "geomort/cohort.hpp"
#include "geomort/image.hpp"

namespace geomort {

// Symmetric m-nearest-neighbor Gaussian affinity graph; zero diagonal.
struct AffinityGraph {
  Eigen::MatrixXd w;     // n x n, symmetric, nonnegative
  double sigma = 0.0;    // bandwidth actually used
  int neighbors = 0;

  int n() const { return static_cast<int>(w.rows()); }
};

// w(i,j) = exp(-|ei-ej|^2 / (2 sigma^2)) when j is among i's m nearest rows
// or vice versa. sigma <= 0 requests the automatic bandwidth: the median
// nonzero neighbor distance.
AffinityGraph build_affinity(const Eigen::MatrixXd& embeddings, int m, double sigma = 0.0);

// Cyclic Jacobi on a dense symmetric matrix. Eigenvalues ascending; each
// eigenvector's sign is canonicalized (largest-magnitude entry positive).
// Converges when the off-diagonal Frobenius norm falls below tol.
void jacobi_eigensymm(const Eigen::MatrixXd& a, Eigen::VectorXd& eigenvalues,
                      Eigen::MatrixXd& eigenvectors, double tol = 1e-10);

// Symmetric normalized Laplacian I - D^{-1/2} W D^{-1/2}.
Eigen::MatrixXd normalized_laplacian(const AffinityGraph& graph);

struct ClusterAssignment {
  std::vector<int> labels;  // 0..k-1 per row
  int k = 0;
};

// Seeded k-means++ with `restarts` independent initializations; keeps the
// lowest-inertia run. Returns labels and centroids.
struct KMeansResult {
  std::vector<int> labels;
  Eigen::MatrixXd centroids;
  double inertia = 0.0;
};
KMeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed,
                    int restarts = 10, int max_iter = 100);

// Rows of the k smallest-eigenvalue eigenvectors of the normalized
// Laplacian, row-normalized, clustered by k-means.
ClusterAssignment spectral_cluster(const AffinityGraph& graph, int k,
                                   std::uint64_t seed = 2015);

// Eigenvectors 2 and 3 of the normalized Laplacian, scaled to unit variance
// per axis.
Eigen::MatrixXd spectral_embed_2d(const AffinityGraph& graph);

struct ClusterSummary {
  int cluster = 0;
  long image_count = 0;
  double mean_mortality = 0.0;
  double mean_income = 0.0;
  double mean_any_college = 0.0;
  double mean_age = 0.0;
  double mean_prop_hispanic = 0.0;
  double mean_population = 0.0;
  std::vector<double> region_fraction;  // index 0 -> region 1, length 8
};

// Per-cluster means over images; each image carries its county's covariates.
std::vector<ClusterSummary> summarize_clusters(
    const ClusterAssignment& assignment, const std::vector<TileKey>& provenance,
    const std::vector<CountyRecord>& counties);

// Assignment CSV: fips,school,row,col,cluster
void write_assignment(std::ostream& out, const ClusterAssignment& assignment,
                      const std::vector<TileKey>& provenance);
// Summary CSV; income and population are rounded to thousands in the report.
void write_cluster_summaries(std::ostream& out, const std::vector<ClusterSummary>& summaries);
// 2-D coordinates CSV: fips,school,row,col,x,y
void write_coords(std::ostream& out, const Eigen::MatrixXd& coords,
                  const std::vector<TileKey>& provenance);

}  // namespace geomort
