#pragma once

#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "fracdiff/forward_solver.hpp"
#include "fracdiff/spectral_domain.hpp"

namespace fracdiff::io {

/// Fifteen significant digits, locale independent, so repeated runs produce
/// identical bytes.
inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return buf;
}

/// First row holds the time grid, first column the space grid.
inline void write_solution_csv(std::ostream& os, const SpaceTimeSolution& sol) {
    os << "x/t";
    for (std::size_t j = 0; j < sol.time.size(); ++j) os << ',' << fmt(sol.time[j]);
    os << '\n';
    for (std::size_t i = 0; i < sol.space.size(); ++i) {
        os << fmt(sol.space.node(i));
        for (std::size_t j = 0; j < sol.time.size(); ++j) os << ',' << fmt(sol(i, j));
        os << '\n';
    }
}

/// One column per eigenfunction, headed by its eigenvalue.
inline void write_eigensystem_csv(std::ostream& os, const EigenSystem& es) {
    os << 'x';
    for (double l : es.eigenvalues()) os << ',' << fmt(l);
    os << '\n';
    for (std::size_t i = 0; i < es.grid().size(); ++i) {
        os << fmt(es.grid().node(i));
        for (std::size_t n = 0; n < es.mode_count(); ++n) os << ',' << fmt(es.phi(n, i));
        os << '\n';
    }
}

/// Plain table: a header row, then rows of equal-length columns.
inline void write_table_csv(std::ostream& os, const std::vector<std::string>& header,
                            const std::vector<std::vector<double>>& columns) {
    detail::require(header.size() == columns.size(), "table header and column count differ");
    for (std::size_t c = 0; c < header.size(); ++c) os << (c ? "," : "") << header[c];
    os << '\n';
    const std::size_t rows = columns.empty() ? 0 : columns.front().size();
    for (const auto& col : columns) detail::require(col.size() == rows, "table columns differ in length");
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < columns.size(); ++c) os << (c ? "," : "") << fmt(columns[c][r]);
        os << '\n';
    }
}

/// Opens path for writing or throws std::runtime_error naming it.
inline std::ofstream open_output(const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open output file '" + path + "'");
    return os;
}

}  // namespace fracdiff::io
