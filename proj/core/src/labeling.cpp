#include "boxlab/labeling.hpp"

#include <algorithm>
#include <unordered_map>

namespace boxlab {

PseudoLabelSet label_scene(const Scene& scene, const std::vector<OverlapSample>& samples,
                           const LabelerParams& teacher) {
    scene.validate();
    const Eigen::Index n = scene.cloud.size();
    const Eigen::Index k = static_cast<Eigen::Index>(scene.boxes.size());

    std::vector<int> membership_count(static_cast<std::size_t>(n), 0);
    std::vector<std::vector<char>> inside(static_cast<std::size_t>(k));
    for (Eigen::Index b = 0; b < k; ++b) {
        auto& row = inside[static_cast<std::size_t>(b)];
        row.resize(static_cast<std::size_t>(n), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (scene.boxes[static_cast<std::size_t>(b)].contains(scene.cloud.positions.row(i).transpose())) {
                row[static_cast<std::size_t>(i)] = 1;
                ++membership_count[static_cast<std::size_t>(i)];
            }
        }
    }

    PseudoLabelSet out;
    out.scene_id = scene.id;
    out.masks = Eigen::MatrixXd::Zero(k, n);
    out.determinate.assign(static_cast<std::size_t>(k * n), 1);
    out.categories.resize(static_cast<std::size_t>(k));
    for (Eigen::Index b = 0; b < k; ++b)
        out.categories[static_cast<std::size_t>(b)] = scene.boxes[static_cast<std::size_t>(b)].category;

    for (Eigen::Index i = 0; i < n; ++i) {
        const std::size_t ii = static_cast<std::size_t>(i);
        if (membership_count[ii] == 1) {
            for (Eigen::Index b = 0; b < k; ++b)
                if (inside[static_cast<std::size_t>(b)][ii]) out.masks(b, i) = 1.0;
        } else if (membership_count[ii] >= 2) {
            // Indeterminate rows, to be filled by the teacher.
            for (Eigen::Index b = 0; b < k; ++b)
                if (inside[static_cast<std::size_t>(b)][ii])
                    out.determinate[static_cast<std::size_t>(b * n + i)] = 0;
        }
    }

    for (const OverlapSample& ovl : samples) {
        if (ovl.scene_id != scene.id)
            throw ValidationError("label_scene: sample belongs to scene '" + ovl.scene_id +
                                  "', not '" + scene.id + "'");
        const TrainingSample ts = materialize_sample(scene, ovl);
        const SamplePrediction pred = predict_sample(teacher, ts);

        // Sample rows are sorted by scene index, so the S3 points of the
        // prediction correspond to sorted(ovl.s3).
        std::vector<int> s3_sorted = ovl.s3;
        std::sort(s3_sorted.begin(), s3_sorted.end());
        if (s3_sorted.size() != pred.s3_point_labels.size())
            throw ValidationError("label_scene: prediction size mismatch for sample of scene '" +
                                  scene.id + "'");

        std::unordered_map<int, int> sp_to_col;
        for (std::size_t c = 0; c < pred.sp_s3.size(); ++c)
            sp_to_col[pred.sp_s3[c]] = static_cast<int>(c);

        const std::vector<int> s3_rows = ts.points_in(Region::S3);
        for (std::size_t j = 0; j < s3_sorted.size(); ++j) {
            const int scene_idx = s3_sorted[j];
            const int col = sp_to_col.at(ts.superpoint[static_cast<std::size_t>(s3_rows[j])]);
            const double ca = pred.s3_sp_conf(0, col);
            const double cb = pred.s3_sp_conf(1, col);
            double va = 0.0, vb = 0.0;
            switch (pred.s3_sp_labels[static_cast<std::size_t>(col)]) {
            case Region3Label::A:
                va = ca;
                vb = std::min(cb, 0.5);
                break;
            case Region3Label::B:
                vb = cb;
                va = std::min(ca, 0.5);
                break;
            case Region3Label::BG:
                break; // both stay 0
            }
            out.masks(ovl.box_a, scene_idx) = std::max(out.masks(ovl.box_a, scene_idx), va);
            out.masks(ovl.box_b, scene_idx) = std::max(out.masks(ovl.box_b, scene_idx), vb);
        }
    }

    out.validate();
    return out;
}

} // namespace boxlab
