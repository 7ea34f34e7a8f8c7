#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace slr {

// Raw input: one row per individual, one column per locus. Genotype codes
// are canonically {0,1,2} but stored as reals so the machinery works for any
// numeric covariate. Missing values are rejected at ingestion.
struct GenotypeData {
    Eigen::MatrixXd values;            // n x p
    std::vector<std::string> snp_ids;  // length p, unique

    GenotypeData() = default;
    GenotypeData(Eigen::MatrixXd v, std::vector<std::string> ids);

    [[nodiscard]] int n() const { return static_cast<int>(values.rows()); }
    [[nodiscard]] int p() const { return static_cast<int>(values.cols()); }

    // Throws IngestionError on empty data, duplicate/missing labels, or
    // non-finite entries.
    void validate() const;

    // Rows given by `idx`, all loci.
    [[nodiscard]] GenotypeData subset_rows(const std::vector<int>& idx) const;

    // Loci given by 1-based indices, all rows.
    [[nodiscard]] GenotypeData subset_loci(const std::vector<int>& loci) const;
};

// Default labels g1..gp.
std::vector<std::string> default_snp_ids(int p);

}  // namespace slr
