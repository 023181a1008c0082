#include "spikevar/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include "json.hpp"
#include "spikevar/csv.hpp"

namespace spikevar {

using nlohmann::json;

int hamming(const std::string& a, const std::string& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("hamming: length mismatch (" + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()) + ")");
  int d = 0;
  for (size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

int mutation_set_distance(const std::vector<Mutation>& a, const std::vector<Mutation>& b) {
  // merge walk over positions; a position where both variants differ from the
  // reference counts once unless they carry the same substitution
  int d = 0;
  size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i].position < b[j].position) {
      ++d;
      ++i;
    } else if (a[i].position > b[j].position) {
      ++d;
      ++j;
    } else {
      if (a[i].alt_aa != b[j].alt_aa) ++d;
      ++i;
      ++j;
    }
  }
  d += static_cast<int>((a.size() - i) + (b.size() - j));
  return d;
}

DistanceMatrix distance_matrix(const std::vector<UniqueVariant>& variants) {
  const int n = static_cast<int>(variants.size());
  DistanceMatrix d;
  d.n = n;
  d.values.resize(size_t(n) * (n - 1) / 2);
  size_t idx = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      d.values[idx++] =
          static_cast<double>(mutation_set_distance(variants[i].mutations, variants[j].mutations));
  return d;
}

Dendrogram ward_cluster(const DistanceMatrix& d) {
  const int n = d.n;
  if (n < 2) throw std::invalid_argument("ward_cluster: need at least 2 items");

  // working copy of the condensed matrix, updated in place
  std::vector<double> dist(d.values);
  auto at = [&](int i, int j) -> double& {
    if (i > j) std::swap(i, j);
    return dist[size_t(i) * n - size_t(i) * (i + 1) / 2 + (j - i - 1)];
  };

  std::vector<int> active;  // positions in 0..n-1 still holding a cluster
  active.resize(n);
  std::iota(active.begin(), active.end(), 0);
  std::vector<int> node_id(n);  // dendrogram node id stored at each position
  std::iota(node_id.begin(), node_id.end(), 0);
  std::vector<int> size(n, 1);

  Dendrogram dg;
  dg.n_leaves = n;
  dg.merges.reserve(n - 1);

  for (int step = 0; step < n - 1; ++step) {
    // scan all active pairs for the minimum; near-ties resolve on the node pair
    double best = std::numeric_limits<double>::infinity();
    int bi = -1, bj = -1;
    for (size_t a = 0; a < active.size(); ++a)
      for (size_t b = a + 1; b < active.size(); ++b) {
        const int i = active[a], j = active[b];
        const double v = at(i, j);
        const double tol = 1e-9 * std::max(1.0, std::max(std::abs(v), std::abs(best)));
        if (v < best - tol) {
          best = v;
          bi = i;
          bj = j;
        } else if (v <= best + tol) {
          const int li = std::min(node_id[i], node_id[j]), lj = std::max(node_id[i], node_id[j]);
          const int bl = std::min(node_id[bi], node_id[bj]), br = std::max(node_id[bi], node_id[bj]);
          if (li < bl || (li == bl && lj < br)) {
            best = std::min(best, v);
            bi = i;
            bj = j;
          }
        }
      }

    const int ni = size[bi], nj = size[bj];
    const double dij = at(bi, bj);
    for (int pos : active) {
      if (pos == bi || pos == bj) continue;
      const int nk = size[pos];
      at(bi, pos) = ((ni + nk) * at(bi, pos) + (nj + nk) * at(bj, pos) - nk * dij) /
                    static_cast<double>(ni + nj + nk);
    }

    MergeStep m;
    m.left = std::min(node_id[bi], node_id[bj]);
    m.right = std::max(node_id[bi], node_id[bj]);
    m.height = dij;
    m.size = ni + nj;
    dg.merges.push_back(m);

    node_id[bi] = n + step;
    size[bi] = ni + nj;
    active.erase(std::find(active.begin(), active.end(), bj));
  }
  return dg;
}

ClusterAssignment cut_tree(const Dendrogram& dg, int k, const std::vector<std::int64_t>& weights) {
  const int n = dg.n_leaves;
  if (k < 1 || k > n) throw std::invalid_argument("cut_tree: k out of range");
  if (!weights.empty() && static_cast<int>(weights.size()) != n)
    throw std::invalid_argument("cut_tree: weights size mismatch");

  // union-find over the first n-k merges
  std::vector<int> parent(2 * n - 1);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (int s = 0; s < n - k; ++s) {
    const int node = n + s;
    parent[find(dg.merges[s].left)] = node;
    parent[find(dg.merges[s].right)] = node;
  }

  // component per leaf, then order components by descending weighted size
  std::vector<int> comp(n);
  std::vector<int> roots;
  for (int v = 0; v < n; ++v) {
    const int r = find(v);
    int idx = -1;
    for (size_t c = 0; c < roots.size(); ++c)
      if (roots[c] == r) idx = static_cast<int>(c);
    if (idx < 0) {
      idx = static_cast<int>(roots.size());
      roots.push_back(r);
    }
    comp[v] = idx;
  }

  struct Bucket {
    std::int64_t weight = 0;
    int first_leaf = std::numeric_limits<int>::max();
  };
  std::vector<Bucket> buckets(roots.size());
  for (int v = 0; v < n; ++v) {
    auto& b = buckets[comp[v]];
    b.weight += weights.empty() ? 1 : weights[v];
    b.first_leaf = std::min(b.first_leaf, v);
  }
  std::vector<int> order(roots.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (buckets[a].weight != buckets[b].weight) return buckets[a].weight > buckets[b].weight;
    return buckets[a].first_leaf < buckets[b].first_leaf;
  });
  std::vector<int> rank(roots.size());
  for (size_t i = 0; i < order.size(); ++i) rank[order[i]] = static_cast<int>(i) + 1;

  ClusterAssignment a;
  a.k = k;
  a.labels.resize(n);
  for (int v = 0; v < n; ++v) a.labels[v] = rank[comp[v]];
  return a;
}

std::vector<MutationFrequencyRow> mutation_frequency_table(
    const ClusterAssignment& assignment, const std::vector<UniqueVariant>& variants, int top_m) {
  if (assignment.labels.size() != variants.size())
    throw std::invalid_argument("mutation_frequency_table: assignment does not cover variants");

  std::vector<MutationFrequencyRow> rows;
  for (int c = 1; c <= assignment.k; ++c) {
    std::int64_t total = 0;
    std::map<Mutation, std::int64_t> carrier;
    for (size_t v = 0; v < variants.size(); ++v) {
      if (assignment.labels[v] != c) continue;
      total += variants[v].count;
      for (const auto& m : variants[v].mutations) carrier[m] += variants[v].count;
    }
    if (total == 0) continue;  // empty cluster emits no rows
    std::vector<std::pair<Mutation, std::int64_t>> sorted(carrier.begin(), carrier.end());
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    for (int i = 0; i < top_m && i < static_cast<int>(sorted.size()); ++i)
      rows.push_back({c, sorted[i].first, static_cast<double>(sorted[i].second) / total});
  }
  return rows;
}

std::vector<TopVariantRow> top_variants(const ClusterAssignment& assignment,
                                        const std::vector<UniqueVariant>& variants, int m) {
  if (assignment.labels.size() != variants.size())
    throw std::invalid_argument("top_variants: assignment does not cover variants");

  auto mutation_list_less = [](const std::vector<Mutation>& a, const std::vector<Mutation>& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
  };

  std::vector<TopVariantRow> rows;
  for (int c = 1; c <= assignment.k; ++c) {
    std::vector<size_t> members;
    for (size_t v = 0; v < variants.size(); ++v)
      if (assignment.labels[v] == c) members.push_back(v);
    std::sort(members.begin(), members.end(), [&](size_t a, size_t b) {
      if (variants[a].count != variants[b].count) return variants[a].count > variants[b].count;
      return mutation_list_less(variants[a].mutations, variants[b].mutations);
    });
    for (int i = 0; i < m && i < static_cast<int>(members.size()); ++i)
      rows.push_back({c, variants[members[i]].count, variants[members[i]].mutations});
  }
  return rows;
}

void write_dendrogram_json(const std::string& path, const Dendrogram& dg) {
  json j;
  j["n_leaves"] = dg.n_leaves;
  json merges = json::array();
  for (const auto& m : dg.merges)
    merges.push_back({{"left", m.left}, {"right", m.right}, {"height", m.height}, {"size", m.size}});
  j["merges"] = std::move(merges);
  write_text_file(path, j.dump(2) + "\n");
}

Dendrogram read_dendrogram_json(const std::string& path) {
  json j = json::parse(read_text_file(path));
  Dendrogram dg;
  dg.n_leaves = j.at("n_leaves").get<int>();
  for (const auto& m : j.at("merges"))
    dg.merges.push_back({m.at("left").get<int>(), m.at("right").get<int>(),
                         m.at("height").get<double>(), m.at("size").get<int>()});
  return dg;
}

void write_assignment_csv(const std::string& path, const ClusterAssignment& a) {
  CsvTable t;
  t.header = {"variant", "cluster"};
  for (size_t v = 0; v < a.labels.size(); ++v)
    t.rows.push_back({std::to_string(v + 1), std::to_string(a.labels[v])});
  write_csv(path, t);
}

ClusterAssignment read_assignment_csv(const std::string& path) {
  CsvTable t = read_csv(path);
  const int vi = t.col("variant"), ci = t.col("cluster");
  ClusterAssignment a;
  a.labels.resize(t.rows.size());
  for (const auto& row : t.rows) {
    const size_t idx = static_cast<size_t>(parse_int(row[vi])) - 1;
    if (idx >= a.labels.size()) throw std::runtime_error(path + ": variant index out of range");
    a.labels[idx] = static_cast<int>(parse_int(row[ci]));
    a.k = std::max(a.k, a.labels[idx]);
  }
  return a;
}

void write_mutation_frequency_csv(const std::string& path,
                                  const std::vector<MutationFrequencyRow>& rows) {
  CsvTable t;
  t.header = {"cluster", "mutation", "frequency"};
  for (const auto& r : rows)
    t.rows.push_back({roman_numeral(r.cluster), r.mutation.str(), format_double(r.frequency)});
  write_csv(path, t);
}

void write_top_variants_csv(const std::string& path, const std::vector<TopVariantRow>& rows) {
  CsvTable t;
  t.header = {"cluster", "frequency", "mutations"};
  for (const auto& r : rows) {
    std::string muts;
    for (size_t i = 0; i < r.mutations.size(); ++i) {
      if (i) muts += ';';
      muts += r.mutations[i].str();
    }
    if (muts.empty()) muts = "reference";
    t.rows.push_back({roman_numeral(r.cluster), std::to_string(r.frequency), muts});
  }
  write_csv(path, t);
}

std::string roman_numeral(int value) {
  if (value < 1) throw std::invalid_argument("roman_numeral: positive values only");
  static const std::pair<int, const char*> table[] = {
      {1000, "M"}, {900, "CM"}, {500, "D"}, {400, "CD"}, {100, "C"}, {90, "XC"}, {50, "L"},
      {40, "XL"},  {10, "X"},   {9, "IX"},  {5, "V"},    {4, "IV"},  {1, "I"}};
  std::string out;
  for (const auto& [v, s] : table)
    while (value >= v) {
      out += s;
      value -= v;
    }
  return out;
}

}  // namespace spikevar
