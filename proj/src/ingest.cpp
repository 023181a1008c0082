#include "spikevar/ingest.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <stdexcept>
#include <unordered_map>

#include "spikevar/csv.hpp"

namespace spikevar {

bool is_standard_aa(char c) {
  static const std::array<bool, 256> table = [] {
    std::array<bool, 256> t{};
    for (const char* p = kAminoAcids; *p; ++p) t[static_cast<unsigned char>(*p)] = true;
    return t;
  }();
  return table[static_cast<unsigned char>(c)];
}

std::string Mutation::str() const {
  return std::string(1, ref_aa) + std::to_string(position) + std::string(1, alt_aa);
}

Mutation Mutation::parse(const std::string& s) {
  if (s.size() < 3) throw std::invalid_argument("bad mutation token: '" + s + "'");
  Mutation m;
  m.ref_aa = s.front();
  m.alt_aa = s.back();
  m.position = static_cast<int>(parse_int(std::string_view(s).substr(1, s.size() - 2)));
  if (m.position < 1 || m.ref_aa == m.alt_aa)
    throw std::invalid_argument("bad mutation token: '" + s + "'");
  return m;
}

HeaderSpec HeaderSpec::parse(const std::string& order) {
  HeaderSpec spec;
  spec.fields = split(order, '|');
  bool id = false, country = false, date = false;
  for (const auto& f : spec.fields) {
    if (f == "id") id = true;
    else if (f == "country") country = true;
    else if (f == "date") date = true;
    else throw std::invalid_argument("unknown header field '" + f + "'");
  }
  if (!id || !country || !date)
    throw std::invalid_argument("header order must mention id, country and date");
  return spec;
}

namespace {

// zlib's gz* functions read uncompressed files transparently, so one code
// path covers both plain and .gz inputs.
std::string read_maybe_gz(const std::string& path) {
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f) throw std::runtime_error("cannot open file: " + path);
  std::string out;
  char buf[1 << 16];
  int n;
  while ((n = gzread(f, buf, sizeof(buf))) > 0) out.append(buf, static_cast<size_t>(n));
  if (n < 0) {
    int errnum = 0;
    const char* msg = gzerror(f, &errnum);
    std::string err = msg ? msg : "gzread failure";
    gzclose(f);
    throw std::runtime_error("read failed for " + path + ": " + err);
  }
  gzclose(f);
  return out;
}

struct PendingRecord {
  SequenceRecord rec;
  bool valid = false;
};

}  // namespace

ParseResult parse_records_text(const std::string& text, const HeaderSpec& spec) {
  ParseResult result;
  PendingRecord pending;
  int line_no = 0;

  auto flush = [&]() {
    if (!pending.valid) return;
    for (auto& c : pending.rec.residues) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    result.records.push_back(std::move(pending.rec));
    pending = PendingRecord{};
  };

  size_t pos = 0;
  while (pos <= text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string line = strip(std::string_view(text).substr(pos, eol - pos));
    pos = eol + 1;
    ++line_no;
    if (line.empty()) {
      if (pos > text.size()) break;
      continue;
    }
    if (line[0] == '>') {
      flush();
      auto fields = split(line.substr(1), '|');
      if (fields.size() < spec.fields.size()) {
        std::string missing = spec.fields[fields.size()];
        result.errors.push_back({line_no, "missing " + missing + " field"});
        continue;
      }
      SequenceRecord rec;
      bool ok = true;
      for (size_t i = 0; i < spec.fields.size(); ++i) {
        const std::string value = strip(fields[i]);
        if (spec.fields[i] == "id") rec.id = value;
        else if (spec.fields[i] == "country") rec.country = value;
        else if (spec.fields[i] == "date") {
          try {
            rec.date = Date::parse(value);
          } catch (const std::exception& e) {
            result.errors.push_back({line_no, e.what()});
            ok = false;
          }
        }
      }
      if (ok && rec.country.empty()) {
        result.errors.push_back({line_no, "empty country field"});
        ok = false;
      }
      if (ok) {
        pending.rec = std::move(rec);
        pending.valid = true;
      }
    } else {
      if (pending.valid) pending.rec.residues += line;
      // sequence data before any valid header is silently dropped; the header
      // error was already recorded
    }
    if (pos > text.size()) break;
  }
  flush();

  // headers with no sequence lines at all
  auto& recs = result.records;
  for (size_t i = 0; i < recs.size();) {
    if (recs[i].residues.empty()) {
      result.errors.push_back({0, "record '" + recs[i].id + "' has no sequence"});
      recs.erase(recs.begin() + i);
    } else {
      ++i;
    }
  }
  return result;
}

ParseResult parse_records_file(const std::string& path, const HeaderSpec& spec) {
  return parse_records_text(read_maybe_gz(path), spec);
}

ReferenceSequence load_reference(const std::string& path) {
  const std::string text = read_maybe_gz(path);
  std::string residues;
  size_t pos = 0;
  bool seen_header = false;
  while (pos <= text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string line = strip(std::string_view(text).substr(pos, eol - pos));
    pos = eol + 1;
    if (!line.empty()) {
      if (line[0] == '>') {
        if (seen_header && !residues.empty()) break;  // single-record file: first entry only
        seen_header = true;
      } else {
        for (char c : line) residues += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      }
    }
    if (pos > text.size()) break;
  }
  if (residues.empty()) throw std::runtime_error("no sequence found in " + path);
  return ReferenceSequence(std::move(residues));
}

std::pair<std::vector<SequenceRecord>, FilterReport> filter_complete(
    const std::vector<SequenceRecord>& records, const ReferenceSequence& ref) {
  std::vector<SequenceRecord> kept;
  FilterReport report;
  for (const auto& rec : records) {
    if (rec.residues.size() != ref.length()) {
      ++report.wrong_length;
      continue;
    }
    bool standard = true;
    for (char c : rec.residues)
      if (!is_standard_aa(c)) {
        standard = false;
        break;
      }
    if (!standard) {
      ++report.nonstandard_letter;
      continue;
    }
    kept.push_back(rec);
    ++report.kept;
  }
  return {std::move(kept), report};
}

std::vector<Mutation> call_mutations(const std::string& seq, const ReferenceSequence& ref) {
  if (seq.size() != ref.length())
    throw std::invalid_argument("call_mutations: sequence length " + std::to_string(seq.size()) +
                                " != reference length " + std::to_string(ref.length()));
  std::vector<Mutation> muts;
  for (size_t i = 0; i < seq.size(); ++i)
    if (seq[i] != ref.residues[i])
      muts.push_back({static_cast<int>(i) + 1, ref.residues[i], seq[i]});
  return muts;
}

std::string apply_mutations(const ReferenceSequence& ref, const std::vector<Mutation>& muts) {
  std::string seq = ref.residues;
  for (const auto& m : muts) {
    if (m.position < 1 || static_cast<size_t>(m.position) > seq.size())
      throw std::invalid_argument("mutation position out of range: " + m.str());
    seq[m.position - 1] = m.alt_aa;
  }
  return seq;
}

std::vector<UniqueVariant> deduplicate(const std::vector<SequenceRecord>& records,
                                       const ReferenceSequence* ref) {
  std::vector<UniqueVariant> variants;
  std::unordered_map<std::string, size_t> index;
  for (const auto& rec : records) {
    auto it = index.find(rec.residues);
    if (it == index.end()) {
      index.emplace(rec.residues, variants.size());
      UniqueVariant v;
      v.residues = rec.residues;
      if (ref) v.mutations = call_mutations(rec.residues, *ref);
      v.count = 1;
      v.member_ids.push_back(rec.id);
      variants.push_back(std::move(v));
    } else {
      auto& v = variants[it->second];
      ++v.count;
      v.member_ids.push_back(rec.id);
    }
  }
  return variants;
}

int CountSeries::country_index(const std::string& code) const {
  for (size_t i = 0; i < countries.size(); ++i)
    if (countries[i] == code) return static_cast<int>(i);
  return -1;
}

TabulateResult tabulate_counts(const std::vector<SequenceRecord>& records,
                               const std::vector<int>& cluster_of, int n_clusters,
                               const std::vector<std::string>& countries, Date start_date,
                               Date end_date) {
  if (records.size() != cluster_of.size())
    throw std::invalid_argument("tabulate_counts: one cluster label per record required");
  if (end_date < start_date) throw std::invalid_argument("tabulate_counts: end_date < start_date");

  TabulateResult out;
  CountSeries& cs = out.series;
  cs.countries = countries;
  cs.start_date = start_date;
  cs.days = static_cast<int>(end_date - start_date) + 1;
  cs.n_clusters = n_clusters;
  cs.counts.assign(size_t(cs.countries.size()) * cs.days * n_clusters, 0);
  out.prestart.assign(n_clusters, 0);

  std::unordered_map<std::string, int> country_index;
  for (size_t i = 0; i < countries.size(); ++i) country_index[countries[i]] = static_cast<int>(i);

  for (size_t r = 0; r < records.size(); ++r) {
    const int c = cluster_of[r];
    if (c < 1 || c > n_clusters)
      throw std::invalid_argument("tabulate_counts: cluster label out of range for record " +
                                  records[r].id);
    auto it = country_index.find(records[r].country);
    if (it == country_index.end()) {
      ++out.unlisted_country;
      continue;
    }
    if (records[r].date < start_date) {
      ++out.prestart[c - 1];
      continue;
    }
    if (records[r].date > end_date) {
      ++out.after_end;
      continue;
    }
    const int t = static_cast<int>(records[r].date - start_date);
    ++cs.at(it->second, t, c - 1);
  }
  return out;
}

void write_counts_csv(const std::string& path, const CountSeries& cs) {
  CsvTable t;
  t.header = {"country", "date", "cluster", "count"};
  t.rows.reserve(cs.counts.size());
  for (size_t i = 0; i < cs.countries.size(); ++i)
    for (int d = 0; d < cs.days; ++d) {
      const std::string date = (cs.start_date + d).iso();
      for (int c = 0; c < cs.n_clusters; ++c)
        t.rows.push_back({cs.countries[i], date, std::to_string(c + 1),
                          std::to_string(cs.at(static_cast<int>(i), d, c))});
    }
  write_csv(path, t);
}

CountSeries read_counts_csv(const std::string& path) {
  CsvTable t = read_csv(path);
  const int ci = t.col("country"), di = t.col("date"), li = t.col("cluster"), ni = t.col("count");

  CountSeries cs;
  std::unordered_map<std::string, int> country_index;
  bool have_dates = false;
  Date min_date, max_date;
  int max_cluster = 0;

  struct Cell {
    int country, day_serial_offset = 0, cluster;
    std::int64_t count;
    Date date;
  };
  std::vector<Cell> cells;
  cells.reserve(t.rows.size());

  for (const auto& row : t.rows) {
    Cell cell;
    auto it = country_index.find(row[ci]);
    if (it == country_index.end()) {
      cell.country = static_cast<int>(cs.countries.size());
      country_index[row[ci]] = cell.country;
      cs.countries.push_back(row[ci]);
    } else {
      cell.country = it->second;
    }
    cell.date = Date::parse(row[di]);
    cell.cluster = static_cast<int>(parse_int(row[li]));
    cell.count = parse_int(row[ni]);
    if (cell.cluster < 1) throw std::runtime_error(path + ": cluster labels are 1-based");
    if (cell.count < 0) throw std::runtime_error(path + ": negative count");
    max_cluster = std::max(max_cluster, cell.cluster);
    if (!have_dates) {
      min_date = max_date = cell.date;
      have_dates = true;
    } else {
      if (cell.date < min_date) min_date = cell.date;
      if (max_date < cell.date) max_date = cell.date;
    }
    cells.push_back(cell);
  }
  if (!have_dates) throw std::runtime_error(path + ": no data rows");

  cs.start_date = min_date;
  cs.days = static_cast<int>(max_date - min_date) + 1;
  cs.n_clusters = max_cluster;
  cs.counts.assign(size_t(cs.countries.size()) * cs.days * cs.n_clusters, 0);
  for (const auto& cell : cells) {
    const int t_idx = static_cast<int>(cell.date - cs.start_date);
    cs.at(cell.country, t_idx, cell.cluster - 1) += cell.count;
  }
  return cs;
}

namespace {

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace

void write_variants_csv(const std::string& path, const std::vector<UniqueVariant>& variants) {
  CsvTable t;
  t.header = {"variant", "count", "mutations", "member_ids", "residues"};
  for (size_t i = 0; i < variants.size(); ++i) {
    std::vector<std::string> muts;
    for (const auto& m : variants[i].mutations) muts.push_back(m.str());
    t.rows.push_back({std::to_string(i + 1), std::to_string(variants[i].count), join(muts, ';'),
                      join(variants[i].member_ids, ';'), variants[i].residues});
  }
  write_csv(path, t);
}

std::vector<UniqueVariant> read_variants_csv(const std::string& path) {
  CsvTable t = read_csv(path);
  const int vi = t.col("variant"), ci = t.col("count"), mi = t.col("mutations"),
            ii = t.col("member_ids"), ri = t.col("residues");
  std::vector<UniqueVariant> variants(t.rows.size());
  for (const auto& row : t.rows) {
    const size_t idx = static_cast<size_t>(parse_int(row[vi])) - 1;
    if (idx >= variants.size()) throw std::runtime_error(path + ": variant index out of range");
    UniqueVariant& v = variants[idx];
    v.count = parse_int(row[ci]);
    if (!row[mi].empty())
      for (const auto& tok : split(row[mi], ';')) v.mutations.push_back(Mutation::parse(tok));
    if (!row[ii].empty()) v.member_ids = split(row[ii], ';');
    v.residues = row[ri];
  }
  return variants;
}

void write_records_csv(const std::string& path, const std::vector<SequenceRecord>& records,
                       const std::vector<int>& variant_of) {
  if (records.size() != variant_of.size())
    throw std::invalid_argument("write_records_csv: size mismatch");
  CsvTable t;
  t.header = {"id", "country", "date", "variant"};
  for (size_t i = 0; i < records.size(); ++i)
    t.rows.push_back({records[i].id, records[i].country, records[i].date.iso(),
                      std::to_string(variant_of[i])});
  write_csv(path, t);
}

std::pair<std::vector<SequenceRecord>, std::vector<int>> read_records_csv(const std::string& path) {
  CsvTable t = read_csv(path);
  const int ii = t.col("id"), ci = t.col("country"), di = t.col("date"), vi = t.col("variant");
  std::vector<SequenceRecord> records;
  std::vector<int> variant_of;
  for (const auto& row : t.rows) {
    SequenceRecord r;
    r.id = row[ii];
    r.country = row[ci];
    r.date = Date::parse(row[di]);
    records.push_back(std::move(r));
    variant_of.push_back(static_cast<int>(parse_int(row[vi])));
  }
  return {std::move(records), std::move(variant_of)};
}

}  // namespace spikevar
