// Render the reference bar from a given UAV position, run the detector and
// recover the camera position with PnP.
//
//   pose_from_image [x y z]      (target frame, metres; default 0.3 -0.2 0.1)

#include <shipland/pose.hpp>
#include <shipland/sim.hpp>
#include <shipland/vision.hpp>

#include <cstdio>
#include <cstdlib>

int main(int argc, char** argv) {
    using namespace shipland;
    UavState uav;
    uav.position = {0.3, -0.2, 0.1};
    if (argc == 4) uav.position = {std::atof(argv[1]), std::atof(argv[2]), std::atof(argv[3])};

    const VisionRig rig;
    const SceneGeometry scene;
    try {
        const RgbImage img = render_bar(rig.camera, uav, rig.bar, scene, rig.image_width, rig.image_height);
        const CornerSet corners = detect_bar(img, rig.detector);
        const Pose pose = solve_pnp(rig.camera, rig.bar.corners(), corners.corners);
        const Eigen::Vector3d est = bar_to_target(camera_position(pose), scene);
        std::printf("true      %9.5f %9.5f %9.5f\n", uav.position.x(), uav.position.y(), uav.position.z());
        std::printf("estimated %9.5f %9.5f %9.5f\n", est.x(), est.y(), est.z());
        std::printf("error     %.3g m\n", (est - uav.position).norm());
    } catch (const Error& e) {
        std::fprintf(stderr, "%s: %s\n", e.code().c_str(), e.what());
        return 1;
    }
    return 0;
}
