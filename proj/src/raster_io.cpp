#include "isac_coop/raster_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "isac_coop/errors.hpp"

namespace isac {

std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_raster_csv(const std::string& path, const RoiGrid& grid,
                      std::span<const double> values) {
    const int nx = grid.nx();
    const int ny = grid.ny();
    if (static_cast<int64_t>(values.size()) != grid.pixel_count())
        throw ConfigError("write_raster_csv: value count does not match the grid");
    std::ofstream out(path, std::ios::binary); // binary: byte-identical newlines everywhere
    if (!out) throw IoError("cannot open for writing: " + path);
    out << format_g17(grid.x_min) << ',' << format_g17(grid.y_min) << ','
        << format_g17(grid.dx) << ',' << format_g17(grid.dy) << ',' << nx << ',' << ny
        << '\n';
    for (int iy = 0; iy < ny; ++iy) {
        for (int ix = 0; ix < nx; ++ix) {
            if (ix) out << ',';
            out << format_g17(values[static_cast<size_t>(ix) + static_cast<size_t>(nx) * iy]);
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

Raster read_raster_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open raster: " + path);
    std::string header;
    if (!std::getline(in, header)) throw IoError("empty raster file: " + path);
    std::istringstream hs(header);
    Raster raster;
    char sep = 0;
    int nx = 0, ny = 0;
    if (!(hs >> raster.grid.x_min >> sep >> raster.grid.y_min >> sep >> raster.grid.dx >>
          sep >> raster.grid.dy >> sep >> nx >> sep >> ny))
        throw IoError("malformed raster header in " + path);
    raster.grid.x_max = raster.grid.x_min + (nx - 1) * raster.grid.dx;
    raster.grid.y_max = raster.grid.y_min + (ny - 1) * raster.grid.dy;
    raster.values.reserve(static_cast<size_t>(nx) * ny);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ','))
            raster.values.push_back(std::strtod(cell.c_str(), nullptr));
    }
    if (raster.values.size() != static_cast<size_t>(nx) * ny)
        throw IoError("raster value count does not match header in " + path);
    return raster;
}

void write_complex_dump(const std::string& path, std::span<const cplx> data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(cplx)));
    if (!out) throw IoError("write failed: " + path);
}

std::vector<cplx> read_complex_dump(const std::string& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw IoError("cannot open dump: " + path);
    const std::streamsize bytes = in.tellg();
    if (bytes % static_cast<std::streamsize>(sizeof(cplx)) != 0)
        throw IoError("dump size is not a multiple of complex128: " + path);
    in.seekg(0);
    std::vector<cplx> data(static_cast<size_t>(bytes) / sizeof(cplx));
    in.read(reinterpret_cast<char*>(data.data()), bytes);
    if (!in) throw IoError("read failed: " + path);
    return data;
}

} // namespace isac
