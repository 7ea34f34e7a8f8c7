#include "slr/genotype.hpp"

#include <cmath>
#include <unordered_set>

#include "slr/errors.hpp"

namespace slr {

GenotypeData::GenotypeData(Eigen::MatrixXd v, std::vector<std::string> ids)
    : values(std::move(v)), snp_ids(std::move(ids)) {
    validate();
}

void GenotypeData::validate() const {
    if (values.rows() < 1 || values.cols() < 1)
        throw IngestionError("genotype data must have n >= 1 and p >= 1");
    if (static_cast<int>(snp_ids.size()) != p())
        throw IngestionError("snp_ids length does not match locus count");
    std::unordered_set<std::string> seen;
    for (const auto& id : snp_ids) {
        if (id.empty()) throw IngestionError("empty SNP label");
        if (!seen.insert(id).second)
            throw IngestionError("duplicate SNP label: " + id);
    }
    if (!values.allFinite())
        throw IngestionError("genotype matrix contains missing or non-finite values");
}

GenotypeData GenotypeData::subset_rows(const std::vector<int>& idx) const {
    Eigen::MatrixXd sub(idx.size(), values.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) sub.row(i) = values.row(idx[i]);
    return GenotypeData(std::move(sub), snp_ids);
}

GenotypeData GenotypeData::subset_loci(const std::vector<int>& loci) const {
    Eigen::MatrixXd sub(values.rows(), loci.size());
    std::vector<std::string> ids(loci.size());
    for (std::size_t j = 0; j < loci.size(); ++j) {
        int locus = loci[j];
        if (locus < 1 || locus > p())
            throw std::out_of_range("locus index out of range: " + std::to_string(locus));
        sub.col(j) = values.col(locus - 1);
        ids[j] = snp_ids[locus - 1];
    }
    return GenotypeData(std::move(sub), std::move(ids));
}

std::vector<std::string> default_snp_ids(int p) {
    std::vector<std::string> ids(p);
    for (int j = 0; j < p; ++j) ids[j] = "g" + std::to_string(j + 1);
    return ids;
}

}  // namespace slr
