#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <nlohmann/json_fwd.hpp>
#include <string>

#include "slr/esc.hpp"
#include "slr/genotype.hpp"
#include "slr/lowrank.hpp"
#include "slr/screening.hpp"
#include "slr/simulate.hpp"

namespace slr {

// Genotype CSV: first row SNP labels, then one numeric row per individual.
// Missing or non-numeric fields are rejected with row/column context.
GenotypeData read_genotype_csv(const std::string& path);
void write_genotype_csv(const std::string& path, const GenotypeData& g);

// Phenotype CSV: a single column; a non-numeric first line is treated as a
// header.
Eigen::VectorXd read_phenotype_csv(const std::string& path);
void write_phenotype_csv(const std::string& path, const Eigen::VectorXd& y,
                         const std::string& header = "y");

nlohmann::json fit_result_to_json(const FitResult& fit);
nlohmann::json selection_to_json(const SelectionModel& model);
nlohmann::json truth_to_json(const TruthSet& truth);
nlohmann::json esc_result_to_json(const EscResult& result);

// Two-column CSV (term label, estimate).
void write_selection_csv(std::ostream& os, const SelectionModel& model);

// Flat JSON config for the esc/screen subcommands; unknown keys and
// out-of-range values fail with the field named.
EscConfig esc_config_from_json(const nlohmann::json& j);

const char* provenance_name(Provenance p);

}  // namespace slr
