#pragma once

#include <string>
#include <vector>

namespace herdsim {

// Minimal dense row-major matrix. Deliberately not a linear-algebra library;
// only what the domain types and the LP solver need.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0) : rows(r), cols(c), a(static_cast<size_t>(r) * c, fill) {}

    double& at(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }
};

// CSV with a `# rows=R cols=C` header line, then comma-separated doubles,
// row-major, one matrix row per line.
Matrix load_matrix_csv(const std::string& path);
void save_matrix_csv(const std::string& path, const Matrix& m);

// 12 significant digits; shared by every CSV writer so reruns are byte-identical.
std::string format_double(double v);

}  // namespace herdsim
