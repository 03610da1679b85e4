#pragma once

#include <filesystem>
#include <string>

#include "depthscan/mesh.hpp"
#include "depthscan/types.hpp"

namespace ds {

// Scalar grids are stored as grayscale PFM ("Pf"), 3-vector grids as color
// PFM ("PF"); both little-endian 32-bit float with bottom-up rows. An optional
// comment line after the magic documents the content convention. Reading
// rejects NaN/Inf samples with ValidationError and malformed headers with
// ParseError (carrying the byte offset).

void write_pfm(const std::filesystem::path& path, const Grid<double>& grid,
               const std::string& comment = "");
Grid<double> read_pfm(const std::filesystem::path& path);

void write_pfm3(const std::filesystem::path& path, const Grid<Eigen::Vector3d>& grid,
                const std::string& comment = "");
Grid<Eigen::Vector3d> read_pfm3(const std::filesystem::path& path);

// Masks are binary PGM (P5), 0 = invalid, 255 = valid.
void write_pgm_mask(const std::filesystem::path& path, const Mask& mask);
Mask read_pgm_mask(const std::filesystem::path& path);

// Depth / normal maps pair a PFM with a PGM mask.
void write_depth(const std::filesystem::path& pfm_path, const std::filesystem::path& mask_path,
                 const DepthMap& depth);
DepthMap read_depth(const std::filesystem::path& pfm_path,
                    const std::filesystem::path& mask_path);

void write_normals(const std::filesystem::path& pfm_path,
                   const std::filesystem::path& mask_path, const NormalMap& normals);
NormalMap read_normals(const std::filesystem::path& pfm_path,
                       const std::filesystem::path& mask_path);

// Meshes: ASCII OBJ (v/f records, 1-based indices, source tags not preserved)
// and binary little-endian PLY (double vertices, uchar side tag; bit-exact
// round trip).
void write_obj(const std::filesystem::path& path, const TriangleMesh& mesh);
TriangleMesh read_obj(const std::filesystem::path& path);

void write_ply(const std::filesystem::path& path, const TriangleMesh& mesh);
TriangleMesh read_ply(const std::filesystem::path& path);

// Dispatch on the file extension (.obj / .ply).
void write_mesh(const std::filesystem::path& path, const TriangleMesh& mesh);
TriangleMesh read_mesh(const std::filesystem::path& path);

}  // namespace ds
