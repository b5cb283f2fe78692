use crate::real::Real;

/// Number of real spherical-harmonic components for bands `l = 0..=3`.
pub const SH_COMPONENTS: usize = 16;

/// Real spherical-harmonic basis, bands 0 through 3, orthonormal on the
/// sphere. Non-unit directions are normalized first.
pub fn sh_encode<F: Real>(dir: [F; 3]) -> [F; SH_COMPONENTS] {
    let mut out = [F::zero(); SH_COMPONENTS];
    sh_encode_into(dir, &mut out);
    out
}

pub fn sh_encode_into<F: Real>(dir: [F; 3], out: &mut [F]) {
    let n = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
    let (x, y, z) = if n > F::zero() {
        (dir[0] / n, dir[1] / n, dir[2] / n)
    } else {
        (F::zero(), F::zero(), F::one())
    };
    let c = F::of;
    let (xx, yy, zz) = (x * x, y * y, z * z);
    out[0] = c(0.282_094_791_773_878_14);
    out[1] = c(-0.488_602_511_902_919_9) * y;
    out[2] = c(0.488_602_511_902_919_9) * z;
    out[3] = c(-0.488_602_511_902_919_9) * x;
    out[4] = c(1.092_548_430_592_079_2) * x * y;
    out[5] = c(-1.092_548_430_592_079_2) * y * z;
    out[6] = c(0.946_174_695_757_56) * zz - c(0.315_391_565_252_52);
    out[7] = c(-1.092_548_430_592_079_2) * x * z;
    out[8] = c(0.546_274_215_296_039_6) * (xx - yy);
    out[9] = c(0.590_043_589_926_643_5) * y * (c(3.0) * xx - yy);
    out[10] = c(2.890_611_442_640_554) * x * y * z;
    out[11] = c(0.457_045_799_464_465_7) * y * (c(5.0) * zz - F::one());
    out[12] = c(0.373_176_332_590_115_4) * z * (c(5.0) * zz - c(3.0));
    out[13] = c(0.457_045_799_464_465_7) * x * (c(5.0) * zz - F::one());
    out[14] = c(1.445_305_721_320_277) * z * (xx - yy);
    out[15] = c(0.590_043_589_926_643_5) * x * (xx - c(3.0) * yy);
}
