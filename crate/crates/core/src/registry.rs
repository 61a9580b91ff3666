//! Built-in curves and kernels by name (one dimension).

use crate::curves;
use crate::geometry::HyperCurve;
use crate::kernel::{self, KernelSpec};

pub const CURVE_NAMES: [&str; 3] = ["diagonal", "two-lines", "diamond"];
pub const KERNEL_NAMES: [&str; 3] = ["hilbert", "two-line-hilbert", "diamond-model"];

pub fn curve(name: &str) -> Option<HyperCurve<1>> {
    match name {
        "diagonal" => Some(curves::diagonal()),
        "two-lines" => Some(curves::two_lines()),
        "diamond" => Some(curves::diamond()),
        _ => None,
    }
}

pub fn kernel(name: &str) -> Option<KernelSpec<1>> {
    match name {
        "hilbert" => Some(kernel::hilbert()),
        "two-line-hilbert" => Some(kernel::two_line_hilbert()),
        "diamond-model" => Some(kernel::diamond_model()),
        _ => None,
    }
}
