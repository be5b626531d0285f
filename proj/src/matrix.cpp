#include "herdsim/matrix.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace herdsim {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

Matrix load_matrix_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open matrix csv: " + path);
    std::string header;
    std::getline(in, header);
    int rows = -1, cols = -1;
    if (std::sscanf(header.c_str(), "# rows=%d cols=%d", &rows, &cols) != 2 || rows < 0 || cols < 0)
        throw std::runtime_error("bad matrix csv header in " + path + ": '" + header + "'");
    Matrix m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        std::string line;
        if (!std::getline(in, line)) throw std::runtime_error("truncated matrix csv: " + path);
        std::stringstream ss(line);
        std::string cell;
        for (int c = 0; c < cols; ++c) {
            if (!std::getline(ss, cell, ','))
                throw std::runtime_error("short row in matrix csv: " + path);
            m.at(r, c) = std::stod(cell);
        }
    }
    return m;
}

void save_matrix_csv(const std::string& path, const Matrix& m) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write matrix csv: " + path);
    out << "# rows=" << m.rows << " cols=" << m.cols << "\n";
    for (int r = 0; r < m.rows; ++r) {
        for (int c = 0; c < m.cols; ++c) {
            if (c) out << ",";
            out << format_double(m.at(r, c));
        }
        out << "\n";
    }
}

}  // namespace herdsim
