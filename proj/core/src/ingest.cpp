#include "mnb/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace mnb {

namespace {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(field);
      field.clear();
    } else if (ch != '\r') {
      field += ch;
    }
  }
  out.push_back(field);
  return out;
}

Table read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open '" + path + "'");
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw IngestError("'" + path + "' is empty");
  t.header = split_csv_line(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != t.header.size())
      throw IngestError("'" + path + "' row " + std::to_string(t.rows.size() + 2) + " has " +
                        std::to_string(fields.size()) + " fields, expected " +
                        std::to_string(t.header.size()));
    t.rows.push_back(std::move(fields));
  }
  if (t.rows.empty()) throw IngestError("'" + path + "' has no data rows");
  return t;
}

std::size_t column_index(const Table& t, const std::string& name) {
  for (std::size_t i = 0; i < t.header.size(); ++i)
    if (t.header[i] == name) return i;
  throw MissingColumn("column '" + name + "' not found");
}

bool parse_double(const std::string& s, double& out) {
  const char* begin = s.data();
  const char* end = begin + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

bool column_is_numeric(const Table& t, std::size_t col) {
  double v;
  for (const auto& row : t.rows)
    if (!parse_double(row[col], v)) return false;
  return true;
}

long long parse_count(const std::string& s, const std::string& column, std::size_t row) {
  double v;
  if (!parse_double(s, v) || v != std::floor(v))
    throw NonIntegerResponse("response '" + column + "' row " + std::to_string(row + 2) +
                             ": '" + s + "' is not an integer");
  if (v < 0)
    throw NegativeCount("response '" + column + "' row " + std::to_string(row + 2) +
                        ": negative count " + s);
  return static_cast<long long>(v);
}

std::vector<std::string> column_levels(const Table& t, std::size_t col) {
  std::set<std::string> levels;
  for (const auto& row : t.rows) levels.insert(row[col]);
  return {levels.begin(), levels.end()};
}

// One encoded covariate column: a name plus per-row values.
struct Encoded {
  std::string name;
  std::vector<double> values;
};

std::vector<Encoded> encode_column(const Table& t, const std::string& name,
                                   const ModelFormulaLite& formula) {
  const std::size_t col = column_index(t, name);
  const std::size_t nrows = t.rows.size();

  if (column_is_numeric(t, col) && !formula.declared_levels.count(name)) {
    Encoded e{name, std::vector<double>(nrows)};
    for (std::size_t r = 0; r < nrows; ++r) parse_double(t.rows[r][col], e.values[r]);
    return {std::move(e)};
  }

  std::vector<std::string> levels;
  if (auto it = formula.declared_levels.find(name); it != formula.declared_levels.end())
    levels = it->second;
  else
    levels = column_levels(t, col);
  if (levels.size() < 2)
    throw IngestError("categorical column '" + name + "' has a single level");

  auto level_of = [&](const std::string& v, std::size_t row) {
    const auto it = std::find(levels.begin(), levels.end(), v);
    if (it == levels.end())
      throw UnseenLevel("column '" + name + "' row " + std::to_string(row + 2) +
                        ": level '" + v + "' was not declared");
    return static_cast<std::size_t>(it - levels.begin());
  };

  if (levels.size() == 2) {
    // two-level: 0/1 by lexicographic level order
    Encoded e{name, std::vector<double>(nrows)};
    for (std::size_t r = 0; r < nrows; ++r)
      e.values[r] = (level_of(t.rows[r][col], r) == 1) ? 1.0 : 0.0;
    return {std::move(e)};
  }

  // k-level: k-1 dummies against the lexicographically first level
  std::vector<Encoded> out;
  for (std::size_t l = 1; l < levels.size(); ++l)
    out.push_back({name + "_" + levels[l], std::vector<double>(nrows, 0.0)});
  for (std::size_t r = 0; r < nrows; ++r) {
    const std::size_t l = level_of(t.rows[r][col], r);
    if (l > 0) out[l - 1].values[r] = 1.0;
  }
  return out;
}

LongitudinalDataset assemble_dataset(const Table& t, std::size_t id_col,
                                     const std::vector<long long>& response,
                                     const std::vector<Encoded>& columns,
                                     const std::vector<double>& offset) {
  // clusters ordered by first appearance of the id
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::string& id = t.rows[r][id_col];
    auto [it, inserted] = groups.try_emplace(id);
    if (inserted) order.push_back(id);
    it->second.push_back(r);
  }

  std::vector<Cluster> clusters;
  clusters.reserve(order.size());
  for (const std::string& id : order) {
    const auto& rows = groups[id];
    Cluster c;
    c.id = id;
    c.X = Matrix(rows.size(), columns.size());
    for (std::size_t j = 0; j < rows.size(); ++j) {
      c.y.push_back(response[rows[j]]);
      c.offset.push_back(offset[rows[j]]);
      for (std::size_t k = 0; k < columns.size(); ++k)
        c.X(j, k) = columns[k].values[rows[j]];
    }
    clusters.push_back(std::move(c));
  }

  std::vector<std::string> names;
  names.reserve(columns.size());
  for (const auto& e : columns) names.push_back(e.name);
  return LongitudinalDataset(std::move(clusters), std::move(names));
}

}  // namespace

std::vector<ModelFormulaLite::Term> parse_terms(const std::string& spec,
                                                const std::vector<std::string>& columns) {
  std::vector<ModelFormulaLite::Term> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const bool literal = std::find(columns.begin(), columns.end(), item) != columns.end();
    const auto colon = item.find(':');
    if (!literal && colon != std::string::npos)
      out.push_back({item.substr(0, colon), item.substr(colon + 1)});
    else
      out.push_back({item, ""});
  }
  if (out.empty()) throw IngestError("no terms given");
  return out;
}

void parse_offset(const std::string& spec, ModelFormulaLite& formula) {
  if (spec.empty() || spec == "none") {
    formula.offset_kind = ModelFormulaLite::OffsetKind::none;
    formula.offset_column.clear();
  } else if (spec.rfind("log:", 0) == 0) {
    formula.offset_kind = ModelFormulaLite::OffsetKind::log_column;
    formula.offset_column = spec.substr(4);
  } else {
    formula.offset_kind = ModelFormulaLite::OffsetKind::column;
    formula.offset_column = spec;
  }
}

LongitudinalDataset ingest_csv(const std::string& path, const std::string& id_column,
                               const ModelFormulaLite& formula) {
  const Table t = read_csv(path);
  const std::size_t id_col = column_index(t, id_column);
  const std::size_t y_col = column_index(t, formula.response);

  std::vector<long long> response(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    response[r] = parse_count(t.rows[r][y_col], formula.response, r);

  std::vector<double> offset(t.rows.size(), 0.0);
  if (formula.offset_kind != ModelFormulaLite::OffsetKind::none) {
    const std::size_t o_col = column_index(t, formula.offset_column);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      double v;
      if (!parse_double(t.rows[r][o_col], v))
        throw IngestError("offset '" + formula.offset_column + "' row " +
                          std::to_string(r + 2) + ": '" + t.rows[r][o_col] +
                          "' is not numeric");
      if (formula.offset_kind == ModelFormulaLite::OffsetKind::log_column) {
        if (!(v > 0.0))
          throw IngestError("offset '" + formula.offset_column + "' row " +
                            std::to_string(r + 2) + ": log of non-positive value");
        v = std::log(v);
      }
      offset[r] = v;
    }
  }

  std::vector<Encoded> columns;
  if (formula.intercept)
    columns.push_back({"intercept", std::vector<double>(t.rows.size(), 1.0)});
  for (const auto& term : formula.terms) {
    if (!term.interaction()) {
      for (auto& e : encode_column(t, term.a, formula)) columns.push_back(std::move(e));
    } else {
      auto lhs = encode_column(t, term.a, formula);
      auto rhs = encode_column(t, term.b, formula);
      if (lhs.size() != 1 || rhs.size() != 1)
        throw IngestError("interaction '" + term.a + ":" + term.b +
                          "' requires numeric or two-level operands");
      Encoded e{term.a + ":" + term.b, std::vector<double>(t.rows.size())};
      for (std::size_t r = 0; r < t.rows.size(); ++r)
        e.values[r] = lhs[0].values[r] * rhs[0].values[r];
      columns.push_back(std::move(e));
    }
  }

  return assemble_dataset(t, id_col, response, columns, offset);
}

std::string emit_canonical_csv(const LongitudinalDataset& data) {
  std::ostringstream out;
  auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) {
      if (ch == '"') q += '"';
      q += ch;
    }
    q += '"';
    return q;
  };
  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };

  out << "cluster_id,y";
  for (const auto& name : data.covariate_names()) out << ',' << quote(name);
  out << ",offset\n";
  for (const Cluster& c : data.clusters()) {
    for (std::size_t j = 0; j < c.m(); ++j) {
      out << quote(c.id) << ',' << c.y[j];
      for (std::size_t k = 0; k < data.p(); ++k) out << ',' << fmt(c.X(j, k));
      out << ',' << fmt(c.offset[j]) << '\n';
    }
  }
  return out.str();
}

LongitudinalDataset ingest_canonical_csv(const std::string& path) {
  const Table t = read_csv(path);
  if (t.header.size() < 3 || t.header.front() != "cluster_id" || t.header[1] != "y" ||
      t.header.back() != "offset")
    throw IngestError("'" + path + "' is not in canonical layout");

  ModelFormulaLite f;
  f.response = "y";
  f.intercept = false;  // the canonical form already carries its intercept column
  f.offset_kind = ModelFormulaLite::OffsetKind::column;
  f.offset_column = "offset";
  for (std::size_t k = 2; k + 1 < t.header.size(); ++k) f.terms.push_back({t.header[k], ""});
  return ingest_csv(path, "cluster_id", f);
}

std::string file_digest_hex(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open '" + path + "'");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char ch;
  while (in.get(ch)) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace mnb
