#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "spikevar/dates.hpp"

namespace spikevar {

inline constexpr const char* kAminoAcids = "ACDEFGHIKLMNPQRSTVWY";

bool is_standard_aa(char c);

struct SequenceRecord {
  std::string id;
  std::string country;
  Date date;
  std::string residues;
};

struct ReferenceSequence {
  std::string residues;  // length 1273 for the S-protein; any length for toys

  explicit ReferenceSequence(std::string r) : residues(std::move(r)) {
    if (residues.empty()) throw std::invalid_argument("empty reference sequence");
  }
  size_t length() const { return residues.size(); }
};

struct Mutation {
  int position = 0;  // 1-based
  char ref_aa = 0;
  char alt_aa = 0;

  bool operator==(const Mutation& o) const {
    return position == o.position && ref_aa == o.ref_aa && alt_aa == o.alt_aa;
  }
  bool operator<(const Mutation& o) const {
    if (position != o.position) return position < o.position;
    if (ref_aa != o.ref_aa) return ref_aa < o.ref_aa;
    return alt_aa < o.alt_aa;
  }
  std::string str() const;               // "D614G"
  static Mutation parse(const std::string& s);
};

struct UniqueVariant {
  std::string residues;
  std::vector<Mutation> mutations;  // sorted by position
  std::int64_t count = 0;
  std::vector<std::string> member_ids;
};

// Sequence parsing ---------------------------------------------------------

struct HeaderSpec {
  // order of pipe-delimited header fields after '>'
  std::vector<std::string> fields{"id", "country", "date"};

  static HeaderSpec parse(const std::string& order);  // e.g. "id|country|date"
};

struct ParseError {
  int line = 0;
  std::string message;
};

struct ParseResult {
  std::vector<SequenceRecord> records;
  std::vector<ParseError> errors;  // record-level problems; parsing continues
};

// FASTA-like input; reads plain or gzip files transparently
ParseResult parse_records_file(const std::string& path, const HeaderSpec& spec = {});
ParseResult parse_records_text(const std::string& text, const HeaderSpec& spec = {});

ReferenceSequence load_reference(const std::string& path);

// Filtering and mutation calling -------------------------------------------

struct FilterReport {
  std::int64_t kept = 0;
  std::int64_t wrong_length = 0;
  std::int64_t nonstandard_letter = 0;
};

std::pair<std::vector<SequenceRecord>, FilterReport> filter_complete(
    const std::vector<SequenceRecord>& records, const ReferenceSequence& ref);

std::vector<Mutation> call_mutations(const std::string& seq, const ReferenceSequence& ref);

// Applies a mutation set to the reference; inverse of call_mutations.
std::string apply_mutations(const ReferenceSequence& ref, const std::vector<Mutation>& muts);

// One UniqueVariant per distinct residue string, in order of first appearance.
std::vector<UniqueVariant> deduplicate(const std::vector<SequenceRecord>& records,
                                       const ReferenceSequence* ref = nullptr);

// Count tabulation ----------------------------------------------------------

struct CountSeries {
  std::vector<std::string> countries;  // K, fixed order
  Date start_date;                     // day t=1
  int days = 0;                        // T
  int n_clusters = 0;                  // C

  std::vector<std::int64_t> counts;  // K*T*C, index (i*T + t)*C + c, zero-based

  std::int64_t& at(int i, int t, int c) { return counts[(size_t(i) * days + t) * n_clusters + c]; }
  std::int64_t at(int i, int t, int c) const {
    return counts[(size_t(i) * days + t) * n_clusters + c];
  }
  std::int64_t total(int i, int t) const {
    std::int64_t n = 0;
    for (int c = 0; c < n_clusters; ++c) n += at(i, t, c);
    return n;
  }
  int country_index(const std::string& code) const;
};

struct TabulateResult {
  CountSeries series;
  std::vector<std::int64_t> prestart;  // per-cluster tally of records before start_date
  std::int64_t unlisted_country = 0;   // records dropped because country not configured
  std::int64_t after_end = 0;
};

// cluster_of maps each record (by index) to a 1-based cluster label
TabulateResult tabulate_counts(const std::vector<SequenceRecord>& records,
                               const std::vector<int>& cluster_of, int n_clusters,
                               const std::vector<std::string>& countries, Date start_date,
                               Date end_date);

// CSV/JSON interchange ------------------------------------------------------

void write_counts_csv(const std::string& path, const CountSeries& cs);
CountSeries read_counts_csv(const std::string& path);

void write_variants_csv(const std::string& path, const std::vector<UniqueVariant>& variants);
std::vector<UniqueVariant> read_variants_csv(const std::string& path);

void write_records_csv(const std::string& path, const std::vector<SequenceRecord>& records,
                       const std::vector<int>& variant_of);
// returns records plus each record's variant index
std::pair<std::vector<SequenceRecord>, std::vector<int>> read_records_csv(const std::string& path);

}  // namespace spikevar
