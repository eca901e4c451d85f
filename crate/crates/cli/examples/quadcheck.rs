fn main() {
    let u: f64 = 8.0;
    let (nc, nk) = (2000, 40000);
    let (mut num, mut den) = (0.0, 0.0);
    for ic in 0..nc {
        let c = -1.0 + 2.0 * (ic as f64 + 0.5) / nc as f64;
        for ik in 0..nk {
            let k = 40.0 * (ik as f64 + 0.5) / nk as f64;
            let w = k * (-(0.5 * k + u * c).powi(2)).exp();
            num += w * k;
            den += w;
        }
    }
    println!("quadrature E[|K|] at U=8 (hard sphere) = {:.4}", num / den);
}
