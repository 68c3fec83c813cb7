#pragma once

#include <cstdint>

#include "sqlinsight/database.hpp"

namespace sqlinsight {

/// Creates and fills SPORTS_FINANCIALS and SPORTS_VIEWERSHIP with synthetic
/// monthly rows for 2021-2023. Same seed, same rows.
void SeedSportsDatabase(Connection& conn, std::uint32_t seed = 20230401);

}  // namespace sqlinsight
