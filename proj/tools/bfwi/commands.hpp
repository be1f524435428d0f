#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace bfwi::cli {

struct CommonOptions {
  std::string config;
  std::string out;
  std::size_t threads = 0;  ///< 0 = BFWI_THREADS or hardware concurrency
  std::optional<std::uint64_t> seed_override;
};

struct ModelOptions {
  std::string checkpoint;
  std::string data;
};

int gen_data(const CommonOptions& common);
int train(const CommonOptions& common, const std::string& data);
int sample(const CommonOptions& common, const ModelOptions& model, std::size_t records);
int eval(const CommonOptions& common, const ModelOptions& model, bool identity, const std::string& distortion);
int nfe_sweep(const CommonOptions& common, const ModelOptions& model, std::vector<std::size_t> nfe_list,
              const std::string& mode, std::size_t repeats);
int guidance_sweep(const CommonOptions& common, const ModelOptions& model, std::vector<double> eta_list,
                   std::size_t guesses, std::size_t records);

}  // namespace bfwi::cli
