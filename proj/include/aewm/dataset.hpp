#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace aewm {

// Immutable after construction (validate() is called by every producer);
// safe to share across parallel workers.
struct ObservationTable {
    std::size_t n = 0;
    std::size_t p = 0;
    std::vector<double> x; // row-major, n * p
    std::vector<double> y;
    std::vector<int> a; // treatment indicator, 0/1
    // Counterfactual outcomes, present only for synthetic superpopulations.
    std::optional<std::vector<double>> y0;
    std::optional<std::vector<double>> y1;
    std::optional<double> known_propensity;

    std::span<const double> row(std::size_t i) const { return {x.data() + i * p, p}; }
    bool has_counterfactuals() const { return y0.has_value() && y1.has_value(); }

    // Enforces the table invariants: consistent dimensions, finite entries,
    // a[i] in {0,1}, and y = a*y1 + (1-a)*y0 when counterfactuals are
    // present. Throws ConfigError with the offending row.
    void validate() const;
};

struct FoldAssignment {
    int K = 0;
    std::vector<int> fold_of; // 0-based fold index per row

    std::size_t n() const { return fold_of.size(); }
};

// Near-equal fold sizes (floor(n/K) or ceil(n/K)); a pure function of
// (n, K, seed).
FoldAssignment partition_folds(std::size_t n, int K, std::uint64_t seed);

struct CsvSchema {
    std::vector<std::string> covariates;
    std::string outcome = "y";
    std::string treatment = "a";
    std::optional<std::string> y0;
    std::optional<std::string> y1;
};

// Default schema for files produced by save_table: covariates x1..xp,
// outcome y, treatment a, counterfactuals y0/y1 when present.
CsvSchema default_schema(std::size_t p, bool counterfactuals);

// Loads a header-row CSV ('.' decimal separator) through the schema mapping.
// Column order in the file is irrelevant. Missing values are rejected.
ObservationTable load_table(const std::string& path, const CsvSchema& schema);

// Writes with round-trip (shortest exact) formatting so that reloading
// reproduces the numeric arrays bitwise.
void save_table(const ObservationTable& table, const std::string& path);

} // namespace aewm
