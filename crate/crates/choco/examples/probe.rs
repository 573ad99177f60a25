use choco::poly::Polynomial;

fn main() {
    let f1 = Polynomial::from_coeffs(&[9.699944783720127, 0.0, 1.0]);
    let f2 = Polynomial::from_coeffs(&[9.807266223190123, 0.0, 1.0]);
    let z = f1.mul(&f1).mul(&f1).mul(&f2).mul(&f2).mul(&f2);
    eprintln!("z = {z}");
    // raw eigenvalues first
    let report = choco::stability::classify(&z);
    eprintln!("classify: {report:?}");
    let roots = z.roots();
    match roots {
        Ok(r) => {
            for root in r {
                eprintln!("  {:.8} {:+.8}i", root.re, root.im);
            }
        }
        Err(e) => eprintln!("roots error: {e}"),
    }
}
