#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mnb/data.hpp"

namespace mnb {

// Minimal model formula: main effects, pairwise interactions, an optional
// offset and an intercept flag.  No transformations beyond log on the offset.
struct ModelFormulaLite {
  struct Term {
    std::string a;
    std::string b;  // empty for a main effect
    bool interaction() const { return !b.empty(); }
  };

  enum class OffsetKind { none, log_column, column };

  std::string response;
  std::vector<Term> terms;
  OffsetKind offset_kind = OffsetKind::none;
  std::string offset_column;
  bool intercept = true;

  // Optional pre-declared categorical levels (column -> ordered levels).  When
  // present, a value outside the declared set raises UnseenLevel; used to score
  // a second file against an already-ingested encoding.
  std::map<std::string, std::vector<std::string>> declared_levels;
};

// "a,b,a:b" -> terms; a literal column whose name contains ':' wins over the
// interaction reading.
std::vector<ModelFormulaLite::Term> parse_terms(const std::string& spec,
                                                const std::vector<std::string>& columns);

// "none" | "log:<col>" | "<col>"
void parse_offset(const std::string& spec, ModelFormulaLite& formula);

// Builds clusters ordered by first appearance of the id.  Categorical columns
// (any non-numeric value) are dummy-coded against the lexicographically first
// level; an intercept column is prepended when the flag is on.
LongitudinalDataset ingest_csv(const std::string& path, const std::string& id_column,
                               const ModelFormulaLite& formula);

// Canonical re-emittable form: id, response, encoded covariates, offset.
std::string emit_canonical_csv(const LongitudinalDataset& data);

// Ingests the canonical form back (columns as emitted, no intercept re-added).
LongitudinalDataset ingest_canonical_csv(const std::string& path);

// FNV-1a digest of a file's bytes, as fixed-width hex (for run manifests).
std::string file_digest_hex(const std::string& path);

}  // namespace mnb
