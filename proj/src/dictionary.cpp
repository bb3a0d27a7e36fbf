#include "ecdl/dictionary.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>
#include <numeric>

#include "ecdl/error.hpp"

namespace ecdl {

namespace {

void warn_if_barely_overcomplete(Eigen::Index n, Eigen::Index num_atoms)
{
    if (num_atoms < 2 * n) {
        std::clog << "ecdl: warning: dictionary with " << num_atoms << " atoms in dimension " << n
                  << " is less than twice overcomplete\n";
    }
}

}  // namespace

Dictionary Dictionary::from_matrix(const Matrix& atoms, InitMode mode, std::optional<std::uint64_t> seed)
{
    require(atoms.rows() >= 1 && atoms.cols() >= 1, ErrorCode::invalid_argument, "dictionary: empty atom matrix");
    require(atoms.cols() >= atoms.rows(), ErrorCode::invalid_argument,
            "dictionary: " + std::to_string(atoms.cols()) + " atoms is fewer than the dimension " +
                std::to_string(atoms.rows()));
    require(all_finite(atoms), ErrorCode::invalid_argument, "dictionary: non-finite entry");
    auto normalized = normalize_columns(atoms);
    require(normalized.zero_columns.empty(), ErrorCode::degenerate,
            "dictionary: atom " + (normalized.zero_columns.empty() ? std::string() : std::to_string(normalized.zero_columns.front())) +
                " has zero norm");
    return Dictionary(std::move(normalized.atoms), mode, seed);
}

Dictionary overcomplete_dct(std::size_t patch_side, std::size_t num_atoms)
{
    require(patch_side >= 1, ErrorCode::invalid_argument, "overcomplete_dct: patch side must be positive");
    const auto q = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(num_atoms))));
    require(q * q == num_atoms, ErrorCode::invalid_argument,
            "overcomplete_dct: atom count " + std::to_string(num_atoms) + " is not a perfect square");
    require(q >= patch_side, ErrorCode::invalid_argument, "overcomplete_dct: sqrt(atoms) must be at least the patch side");

    const auto side = static_cast<Eigen::Index>(patch_side);
    const auto qq = static_cast<Eigen::Index>(q);
    Matrix c(side, qq);
    for (Eigen::Index p = 0; p < qq; ++p) {
        for (Eigen::Index i = 0; i < side; ++i) {
            c(i, p) = std::cos(static_cast<double>(i * p) * std::numbers::pi / static_cast<double>(q));
        }
        if (p > 0) c.col(p).array() -= c.col(p).mean();
        c.col(p) /= c.col(p).norm();
    }

    // Atom (p1, p2) -> column p1*q + p2; pixel (i1, i2) -> row i1*side + i2.
    Matrix atoms(side * side, qq * qq);
    for (Eigen::Index p1 = 0; p1 < qq; ++p1) {
        for (Eigen::Index p2 = 0; p2 < qq; ++p2) {
            for (Eigen::Index i1 = 0; i1 < side; ++i1) {
                for (Eigen::Index i2 = 0; i2 < side; ++i2) {
                    atoms(i1 * side + i2, p1 * qq + p2) = c(i1, p1) * c(i2, p2);
                }
            }
        }
    }
    warn_if_barely_overcomplete(atoms.rows(), atoms.cols());
    return Dictionary::from_matrix(atoms, InitMode::dct);
}

Dictionary random_dictionary(std::size_t n, std::size_t num_atoms, Rng& rng)
{
    require(n >= 1 && num_atoms >= n, ErrorCode::invalid_argument, "random_dictionary: need 1 <= n <= K");
    const std::uint64_t seed = rng.seed();
    Matrix atoms = seeded_uniform_matrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(num_atoms), 0.0, 1.0, rng);
    warn_if_barely_overcomplete(atoms.rows(), atoms.cols());
    return Dictionary::from_matrix(atoms, InitMode::random, seed);
}

NormalizedColumns normalize_columns(const Matrix& d)
{
    NormalizedColumns out{d, std::vector<double>(static_cast<std::size_t>(d.cols()), 0.0), {}};
    double largest = 0.0;
    for (Eigen::Index j = 0; j < d.cols(); ++j) largest = std::max(largest, d.col(j).norm());
    for (Eigen::Index j = 0; j < d.cols(); ++j) {
        const double norm = d.col(j).norm();
        if (norm == 0.0 || norm <= kZeroColumnRelTol * largest) {
            out.zero_columns.push_back(static_cast<std::size_t>(j));
            continue;
        }
        out.scales[static_cast<std::size_t>(j)] = norm;
        if (norm != 1.0) out.atoms.col(j) /= norm;
    }
    return out;
}

std::vector<std::size_t> degenerate_atoms(const Matrix& atoms)
{
    const Eigen::Index k = atoms.cols();
    std::vector<double> norms(static_cast<std::size_t>(k));
    double largest = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
        norms[static_cast<std::size_t>(j)] = atoms.col(j).norm();
        largest = std::max(largest, norms[static_cast<std::size_t>(j)]);
    }
    std::vector<bool> flagged(static_cast<std::size_t>(k), false);
    for (Eigen::Index j = 0; j < k; ++j) {
        const double nj = norms[static_cast<std::size_t>(j)];
        if (nj == 0.0 || nj <= kZeroColumnRelTol * largest) flagged[static_cast<std::size_t>(j)] = true;
    }
    const Matrix gram = atoms.transpose() * atoms;
    for (Eigen::Index j = 0; j < k; ++j) {
        if (flagged[static_cast<std::size_t>(j)]) continue;
        for (Eigen::Index i = 0; i < j; ++i) {
            if (flagged[static_cast<std::size_t>(i)]) continue;
            const double cosine = std::abs(gram(i, j)) / (norms[static_cast<std::size_t>(i)] * norms[static_cast<std::size_t>(j)]);
            if (cosine > kDuplicateThreshold) {
                flagged[static_cast<std::size_t>(j)] = true;
                break;
            }
        }
    }
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < flagged.size(); ++j) {
        if (flagged[j]) out.push_back(j);
    }
    return out;
}

RepairResult replace_degenerate_atoms(const Matrix& atoms, const Matrix& samples, std::span<const double> residuals,
                                      Rng& rng, RepairOverflow overflow)
{
    require(samples.rows() == atoms.rows(), ErrorCode::dimension_mismatch, "replace_degenerate_atoms: sample dimension differs from atom dimension");
    require(residuals.size() == static_cast<std::size_t>(samples.cols()), ErrorCode::dimension_mismatch,
            "replace_degenerate_atoms: one residual per sample required");

    const std::vector<std::size_t> bad = degenerate_atoms(atoms);
    Matrix repaired = normalize_columns(atoms).atoms;
    if (bad.empty()) return {Dictionary::from_matrix(repaired), {}};

    std::vector<std::size_t> order(residuals.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return residuals[a] > residuals[b]; });

    // Atoms that stay, plus replacements as they are placed. A candidate
    // sample that would duplicate one of them is skipped.
    std::vector<bool> live(static_cast<std::size_t>(atoms.cols()), true);
    for (const std::size_t j : bad) live[j] = false;
    const auto duplicates_live = [&](const Vector& v) {
        for (Eigen::Index c = 0; c < repaired.cols(); ++c) {
            if (live[static_cast<std::size_t>(c)] && std::abs(repaired.col(c).dot(v)) > kDuplicateThreshold) return true;
        }
        return false;
    };

    std::size_t next = 0;
    for (const std::size_t j : bad) {
        const auto col = static_cast<Eigen::Index>(j);
        bool placed = false;
        while (!placed && next < order.size()) {
            const auto s = samples.col(static_cast<Eigen::Index>(order[next++]));
            const double norm = s.norm();
            if (norm == 0.0) continue;
            const Vector v = s / norm;
            if (duplicates_live(v)) continue;
            repaired.col(col) = v;
            placed = true;
        }
        if (placed) {
            live[j] = true;
            continue;
        }
        require(overflow == RepairOverflow::random, ErrorCode::degenerate,
                "replace_degenerate_atoms: " + std::to_string(bad.size()) + " degenerate atoms but only " +
                    std::to_string(samples.cols()) + " usable samples");
        Vector v(atoms.rows());
        do {
            for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.uniform(-1.0, 1.0);
        } while (v.norm() == 0.0);
        repaired.col(col) = v / v.norm();
        live[j] = true;
    }
    return {Dictionary::from_matrix(repaired), bad};
}

double coherence(const Dictionary& d)
{
    const Matrix gram = d.atoms().transpose() * d.atoms();
    double worst = 0.0;
    for (Eigen::Index i = 0; i < gram.rows(); ++i) {
        for (Eigen::Index j = 0; j < gram.cols(); ++j) {
            if (i != j) worst = std::max(worst, std::abs(gram(i, j)));
        }
    }
    return worst;
}

}  // namespace ecdl
