#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spikevar/ingest.hpp"

namespace spikevar {

// Condensed upper-triangular pairwise distances over n items.
struct DistanceMatrix {
  int n = 0;
  std::vector<double> values;  // size n*(n-1)/2, pair (i<j) at index i*n - i*(i+1)/2 + (j-i-1)

  double at(int i, int j) const {
    if (i == j) return 0.0;
    if (i > j) std::swap(i, j);
    return values[size_t(i) * n - size_t(i) * (i + 1) / 2 + (j - i - 1)];
  }
  double& ref(int i, int j) {
    if (i > j) std::swap(i, j);
    return values[size_t(i) * n - size_t(i) * (i + 1) / 2 + (j - i - 1)];
  }
};

struct MergeStep {
  int left = 0;   // node ids: leaves 0..n-1, internal nodes n..2n-2 in merge order
  int right = 0;  // left < right
  double height = 0.0;
  int size = 0;  // members in the new cluster
};

struct Dendrogram {
  int n_leaves = 0;
  std::vector<MergeStep> merges;  // n-1 steps
};

struct ClusterAssignment {
  int k = 0;
  std::vector<int> labels;  // per variant, 1..k; label I = 1 is the largest cluster
};

int hamming(const std::string& a, const std::string& b);

// Distance between two sorted mutation sets called against one reference;
// equals the dense hamming distance between the mutated sequences.
int mutation_set_distance(const std::vector<Mutation>& a, const std::vector<Mutation>& b);

DistanceMatrix distance_matrix(const std::vector<UniqueVariant>& variants);

// Agglomeration with the ward.D update (Lance-Williams on the raw input
// dissimilarities). Near-ties (1e-9 relative) break on the smallest
// (left,right) node pair so float noise cannot flip the merge order.
Dendrogram ward_cluster(const DistanceMatrix& d);

// Partition from undoing the last k-1 merges; clusters relabeled 1..k by
// descending total member count (weighted by variant counts when given).
ClusterAssignment cut_tree(const Dendrogram& dg, int k,
                           const std::vector<std::int64_t>& weights = {});

struct MutationFrequencyRow {
  int cluster = 0;
  Mutation mutation;
  double frequency = 0.0;  // fraction of cluster members (count-weighted)
};

std::vector<MutationFrequencyRow> mutation_frequency_table(
    const ClusterAssignment& assignment, const std::vector<UniqueVariant>& variants, int top_m);

struct TopVariantRow {
  int cluster = 0;
  std::int64_t frequency = 0;
  std::vector<Mutation> mutations;
};

std::vector<TopVariantRow> top_variants(const ClusterAssignment& assignment,
                                        const std::vector<UniqueVariant>& variants, int m);

// I/O -----------------------------------------------------------------------

void write_dendrogram_json(const std::string& path, const Dendrogram& dg);
Dendrogram read_dendrogram_json(const std::string& path);
void write_assignment_csv(const std::string& path, const ClusterAssignment& a);
ClusterAssignment read_assignment_csv(const std::string& path);
void write_mutation_frequency_csv(const std::string& path,
                                  const std::vector<MutationFrequencyRow>& rows);
void write_top_variants_csv(const std::string& path, const std::vector<TopVariantRow>& rows);

std::string roman_numeral(int value);  // cluster display labels I, II, ...

}  // namespace spikevar
