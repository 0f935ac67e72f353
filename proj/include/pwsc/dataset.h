// Copyright 2026 The pwsc Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PWSC_DATASET_H_
#define PWSC_DATASET_H_

#include <cstdint>
#include <string>
#include <vector>

#include "pwsc/tensor.h"

namespace pwsc {

struct TileRect {
  int x = 0;
  int y = 0;
  int size = 0;
  bool operator==(const TileRect&) const = default;
};

// Raster-order tile origins; tiles that would cross the border are dropped.
std::vector<TileRect> TileGrid(int height, int width, int tile_size = 224,
                               int stride = 224);
Tensor CropTile(const Tensor& image, const TileRect& rect);
std::vector<Tensor> TileImage(const Tensor& image, int tile_size = 224,
                              int stride = 224);

// One source image (a pre-exported slide region) and its tiles.
struct SlideRecord {
  std::string slide_id;
  std::string path;
  int height = 0;
  int width = 0;
  std::vector<TileRect> tiles;
};

// A tile with its provenance. `path` is the tile image file when tiles are
// materialized, otherwise empty.
struct TileRef {
  std::string slide_id;
  std::string source;
  std::string path;
  TileRect rect;
};

struct TileSet {
  std::string split;  // "train" or "test"
  std::vector<TileRef> tiles;
  std::vector<std::string> slide_ids;
};

struct SplitResult {
  TileSet train;
  TileSet test;
};

// Slides are ordered by a seeded hash of their id; the first
// round(test_fraction * slides), at least one and at most slides - 1, go to
// test. Whole slides land on one side.
SplitResult SplitSlides(const std::vector<SlideRecord>& records, double test_fraction,
                        uint64_t seed);
SplitResult SplitTiles(const std::vector<TileRef>& tiles, double test_fraction,
                       uint64_t seed);

// Throws kDataError naming the first slide found on both sides.
void CheckNoLeakage(const std::vector<std::string>& train_slides,
                    const std::vector<std::string>& test_slides);

// Line-delimited JSON manifests.
//   corpus: {"slide_id", "path", "height", "width"}
//   tiles:  {"slide_id", "source", "path", "x", "y", "size"[, "split"]}
std::vector<SlideRecord> ReadCorpusManifest(const std::string& path);
void WriteCorpusManifest(const std::string& path, const std::vector<SlideRecord>& records);
std::vector<TileRef> ReadTileManifest(const std::string& path);
void WriteTileManifest(const std::string& path, const std::vector<TileRef>& tiles,
                       const std::string& split = "");

// Loads a tile: the tile file when present, else a crop of the source image.
// Relative paths resolve against `base_dir`.
Tensor LoadTile(const TileRef& tile, const std::string& base_dir = "");

// Procedural H&E-like tissue: eosin stroma with fibres, lumen gaps and
// hematoxylin nuclei. Deterministic in `seed`.
Tensor SynthesizeTissue(int height, int width, uint64_t seed);

}  // namespace pwsc

#endif  // PWSC_DATASET_H_
