#include "pointgpe/hdf5_io.hpp"

#include <hdf5.h>

#include <cstring>
#include <mutex>
#include <vector>

namespace pointgpe::h5 {

namespace {

// Failed HDF5 calls return negative ids; errors surface as io_error instead
// of the library's stderr dump.
void silence_hdf5_once() {
  static std::once_flag flag;
  std::call_once(flag, []() { H5Eset_auto2(H5E_DEFAULT, nullptr, nullptr); });
}

struct Hid {
  hid_t id = H5I_INVALID_HID;
  herr_t (*closer)(hid_t) = nullptr;
  Hid(hid_t id_, herr_t (*closer_)(hid_t)) : id(id_), closer(closer_) {}
  ~Hid() {
    if (id >= 0 && closer) closer(id);
  }
  Hid(const Hid&) = delete;
  Hid& operator=(const Hid&) = delete;
  bool valid() const { return id >= 0; }
};

}  // namespace

PointsFile read_points_file(const std::string& path) {
  silence_hdf5_once();

  Hid file(H5Fopen(path.c_str(), H5F_ACC_RDONLY, H5P_DEFAULT), H5Fclose);
  if (!file.valid()) throw io_error(path + ": cannot open as an HDF5 file");

  Hid data(H5Dopen2(file.id, "data", H5P_DEFAULT), H5Dclose);
  if (!data.valid()) throw io_error(path + ": missing dataset 'data'");
  Hid data_type(H5Dget_type(data.id), H5Tclose);
  if (H5Tget_class(data_type.id) != H5T_FLOAT)
    throw io_error(path + ": dataset 'data' is not floating point");
  Hid data_space(H5Dget_space(data.id), H5Sclose);
  if (H5Sget_simple_extent_ndims(data_space.id) != 3)
    throw io_error(path + ": dataset 'data' must have shape B x P x 3");
  hsize_t dims[3] = {0, 0, 0};
  H5Sget_simple_extent_dims(data_space.id, dims, nullptr);
  if (dims[2] != 3) throw io_error(path + ": dataset 'data' last dimension must be 3");
  const size_t batch = static_cast<size_t>(dims[0]);
  const size_t points = static_cast<size_t>(dims[1]);
  if (batch == 0 || points == 0) throw io_error(path + ": dataset 'data' is empty");

  std::vector<float> raw(batch * points * 3);
  if (H5Dread(data.id, H5T_NATIVE_FLOAT, H5S_ALL, H5S_ALL, H5P_DEFAULT, raw.data()) < 0)
    throw io_error(path + ": failed to read dataset 'data'");

  Hid label(H5Dopen2(file.id, "label", H5P_DEFAULT), H5Dclose);
  if (!label.valid()) throw io_error(path + ": missing dataset 'label'");
  Hid label_type(H5Dget_type(label.id), H5Tclose);
  if (H5Tget_class(label_type.id) != H5T_INTEGER)
    throw io_error(path + ": dataset 'label' is not integer");
  Hid label_space(H5Dget_space(label.id), H5Sclose);
  const int label_rank = H5Sget_simple_extent_ndims(label_space.id);
  hsize_t label_dims[2] = {0, 0};
  if (label_rank == 1) {
    H5Sget_simple_extent_dims(label_space.id, label_dims, nullptr);
  } else if (label_rank == 2) {
    H5Sget_simple_extent_dims(label_space.id, label_dims, nullptr);
    if (label_dims[1] != 1)
      throw io_error(path + ": dataset 'label' must have shape B or B x 1");
  } else {
    throw io_error(path + ": dataset 'label' must have shape B or B x 1");
  }
  if (label_dims[0] != batch)
    throw io_error(path + ": 'label' count " + std::to_string(label_dims[0]) +
                   " does not match 'data' batch " + std::to_string(batch));

  std::vector<long long> labels(batch);
  if (H5Dread(label.id, H5T_NATIVE_LLONG, H5S_ALL, H5S_ALL, H5P_DEFAULT, labels.data()) < 0)
    throw io_error(path + ": failed to read dataset 'label'");

  PointsFile out;
  out.labels = std::move(labels);
  out.clouds.resize(batch);
  for (size_t b = 0; b < batch; ++b) {
    out.clouds[b].resize(points, 3);
    std::memcpy(out.clouds[b].data(), raw.data() + b * points * 3, points * 3 * sizeof(float));
  }
  return out;
}

void write_points_file(const std::string& path, const std::vector<PointMatrix<float>>& clouds,
                       const std::vector<long long>& labels, bool label_rank2) {
  silence_hdf5_once();
  if (clouds.empty() || clouds.size() != labels.size())
    throw std::invalid_argument("write_points_file: clouds and labels must be non-empty and equal");
  const size_t points = static_cast<size_t>(clouds.front().rows());
  for (const auto& cloud : clouds)
    if (static_cast<size_t>(cloud.rows()) != points)
      throw std::invalid_argument("write_points_file: all clouds must have equal point counts");

  Hid file(H5Fcreate(path.c_str(), H5F_ACC_TRUNC, H5P_DEFAULT, H5P_DEFAULT), H5Fclose);
  if (!file.valid()) throw io_error(path + ": cannot create HDF5 file");

  const hsize_t data_dims[3] = {clouds.size(), points, 3};
  Hid data_space(H5Screate_simple(3, data_dims, nullptr), H5Sclose);
  Hid data(H5Dcreate2(file.id, "data", H5T_IEEE_F32LE, data_space.id, H5P_DEFAULT, H5P_DEFAULT,
                      H5P_DEFAULT),
           H5Dclose);
  if (!data.valid()) throw io_error(path + ": cannot create dataset 'data'");
  std::vector<float> raw(clouds.size() * points * 3);
  for (size_t b = 0; b < clouds.size(); ++b)
    std::memcpy(raw.data() + b * points * 3, clouds[b].data(), points * 3 * sizeof(float));
  if (H5Dwrite(data.id, H5T_NATIVE_FLOAT, H5S_ALL, H5S_ALL, H5P_DEFAULT, raw.data()) < 0)
    throw io_error(path + ": failed to write dataset 'data'");

  const hsize_t label_dims[2] = {labels.size(), 1};
  Hid label_space(H5Screate_simple(label_rank2 ? 2 : 1, label_dims, nullptr), H5Sclose);
  Hid label(H5Dcreate2(file.id, "label", H5T_STD_I64LE, label_space.id, H5P_DEFAULT, H5P_DEFAULT,
                       H5P_DEFAULT),
            H5Dclose);
  if (!label.valid()) throw io_error(path + ": cannot create dataset 'label'");
  if (H5Dwrite(label.id, H5T_NATIVE_LLONG, H5S_ALL, H5S_ALL, H5P_DEFAULT, labels.data()) < 0)
    throw io_error(path + ": failed to write dataset 'label'");
}

}  // namespace pointgpe::h5
