#pragma once

#include <span>
#include <string>
#include <vector>

#include "isac_coop/estimator.hpp"

namespace isac {

/// Headered CSV raster. First line: x_min,y_min,dx,dy,nx,ny. Then ny rows of
/// nx comma-separated values, row-major (y outer, x inner), origin at
/// (x_min, y_min). Values use 17 significant digits; excluded pixels are nan.
void write_raster_csv(const std::string& path, const RoiGrid& grid,
                      std::span<const double> values);

struct Raster {
    RoiGrid grid;
    std::vector<double> values;
};

Raster read_raster_csv(const std::string& path);

/// Raw little-endian complex128 dump (interleaved re, im).
void write_complex_dump(const std::string& path, std::span<const cplx> data);
std::vector<cplx> read_complex_dump(const std::string& path);

/// Shortest decimal form that round-trips a double (17 significant digits).
std::string format_g17(double v);

} // namespace isac
