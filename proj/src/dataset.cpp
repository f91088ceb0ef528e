#include "aewm/dataset.hpp"

#include "aewm/error.hpp"
#include "aewm/random.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace aewm {

void ObservationTable::validate() const {
    if (n == 0) throw ConfigError("table: n must be >= 1");
    if (p == 0) throw ConfigError("table: covariate dimension must be >= 1");
    if (x.size() != n * p || y.size() != n || a.size() != n)
        throw ConfigError("table: column lengths disagree");
    if (y0.has_value() != y1.has_value())
        throw ConfigError("table: y0 and y1 must be present together");
    if (y0 && (y0->size() != n || y1->size() != n))
        throw ConfigError("table: counterfactual column lengths disagree");
    if (known_propensity && !(*known_propensity > 0.0 && *known_propensity < 1.0))
        throw ConfigError("table: known propensity must lie in (0,1)");

    for (std::size_t i = 0; i < n; ++i) {
        if (a[i] != 0 && a[i] != 1)
            throw ConfigError("table: treatment outside {0,1} at row " + std::to_string(i));
        if (!std::isfinite(y[i]))
            throw ConfigError("table: non-finite outcome at row " + std::to_string(i));
        for (std::size_t j = 0; j < p; ++j)
            if (!std::isfinite(x[i * p + j]))
                throw ConfigError("table: non-finite covariate at row " + std::to_string(i));
        if (y0) {
            const double e0 = (*y0)[i], e1 = (*y1)[i];
            if (!std::isfinite(e0) || !std::isfinite(e1))
                throw ConfigError("table: non-finite counterfactual at row " + std::to_string(i));
            const double realized = a[i] == 1 ? e1 : e0;
            if (y[i] != realized)
                throw ConfigError("table: realized outcome differs from selected arm at row " +
                                  std::to_string(i));
        }
    }
}

FoldAssignment partition_folds(std::size_t n, int K, std::uint64_t seed) {
    if (K < 2) throw ConfigError("partition_folds: K must be >= 2");
    if (static_cast<std::size_t>(K) > n) throw ConfigError("partition_folds: K exceeds n");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng::shuffle(order, rng::Stream(seed).child(0x666f6c64)); // "fold"

    FoldAssignment folds;
    folds.K = K;
    folds.fold_of.assign(n, 0);
    for (std::size_t r = 0; r < n; ++r)
        folds.fold_of[order[r]] = static_cast<int>(r % static_cast<std::size_t>(K));
    return folds;
}

CsvSchema default_schema(std::size_t p, bool counterfactuals) {
    CsvSchema schema;
    for (std::size_t j = 1; j <= p; ++j) schema.covariates.push_back("x" + std::to_string(j));
    if (counterfactuals) {
        schema.y0 = "y0";
        schema.y1 = "y1";
    }
    return schema;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

double parse_cell(const std::string& cell, std::size_t row, const std::string& column) {
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end > begin && (end[-1] == ' ' || end[-1] == '\t' || end[-1] == '\r')) --end;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end)
        throw ConfigError("csv: non-numeric cell in column '" + column + "' at data row " +
                          std::to_string(row));
    return value;
}

std::size_t find_column(const std::vector<std::string>& header, const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ConfigError("csv: missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
}

} // namespace

ObservationTable load_table(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw ConfigError("csv: cannot open '" + path + "'");
    if (schema.covariates.empty()) throw ConfigError("csv: schema names no covariate columns");

    std::string line;
    if (!std::getline(in, line)) throw ConfigError("csv: empty file '" + path + "'");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> header = split_csv_line(line);
    for (auto& h : header) {
        while (!h.empty() && (h.back() == ' ' || h.back() == '\r')) h.pop_back();
        while (!h.empty() && h.front() == ' ') h.erase(h.begin());
    }

    std::vector<std::size_t> xcol;
    for (const auto& name : schema.covariates) xcol.push_back(find_column(header, name));
    const std::size_t ycol = find_column(header, schema.outcome);
    const std::size_t acol = find_column(header, schema.treatment);
    std::optional<std::size_t> y0col, y1col;
    if (schema.y0) y0col = find_column(header, *schema.y0);
    if (schema.y1) y1col = find_column(header, *schema.y1);
    if (y0col.has_value() != y1col.has_value())
        throw ConfigError("csv: schema must name both counterfactual columns or neither");

    ObservationTable table;
    table.p = xcol.size();
    if (y0col) {
        table.y0.emplace();
        table.y1.emplace();
    }

    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw ConfigError("csv: wrong cell count at data row " + std::to_string(row));
        for (std::size_t j = 0; j < xcol.size(); ++j)
            table.x.push_back(parse_cell(cells[xcol[j]], row, schema.covariates[j]));
        table.y.push_back(parse_cell(cells[ycol], row, schema.outcome));
        const double av = parse_cell(cells[acol], row, schema.treatment);
        if (av != 0.0 && av != 1.0)
            throw ConfigError("csv: treatment value outside {0,1} at data row " +
                              std::to_string(row));
        table.a.push_back(static_cast<int>(av));
        if (y0col) {
            table.y0->push_back(parse_cell(cells[*y0col], row, *schema.y0));
            table.y1->push_back(parse_cell(cells[*y1col], row, *schema.y1));
        }
        ++row;
    }
    table.n = row;
    table.validate();
    return table;
}

namespace {

void write_number(std::string& out, double v) {
    char buf[32];
    int len = std::snprintf(buf, sizeof(buf), "%.17g", v);
    out.append(buf, static_cast<std::size_t>(len));
}

} // namespace

void save_table(const ObservationTable& table, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("csv: cannot write '" + path + "'");

    std::string line;
    for (std::size_t j = 1; j <= table.p; ++j) {
        line += "x" + std::to_string(j);
        line += ',';
    }
    line += "y,a";
    if (table.has_counterfactuals()) line += ",y0,y1";
    out << line << '\n';

    for (std::size_t i = 0; i < table.n; ++i) {
        line.clear();
        for (std::size_t j = 0; j < table.p; ++j) {
            write_number(line, table.x[i * table.p + j]);
            line += ',';
        }
        write_number(line, table.y[i]);
        line += ',';
        line += table.a[i] == 1 ? '1' : '0';
        if (table.has_counterfactuals()) {
            line += ',';
            write_number(line, (*table.y0)[i]);
            line += ',';
            write_number(line, (*table.y1)[i]);
        }
        out << line << '\n';
    }
}

} // namespace aewm
