use ntkorders::activation::{ActivationKind, ActivationModel};
use ntkorders::moments::{Covariance, MomentEngine, MomentQuery, QuadratureNodes};

fn main() {
    for kind in [ActivationKind::Gelu, ActivationKind::Tanh, ActivationKind::Erf] {
        let model = ActivationModel::new(kind).unwrap();
        let cov = Covariance::new(2, vec![5.4, 2.1, 2.1, 3.8]).unwrap();
        println!("{kind:?}");
        for n in [60usize, 100, 120, 200, 240, 400] {
            let e = MomentEngine::with_nodes(model, QuadratureNodes { dim1: n, dim2: n, dim34: n });
            let ss = e.expect_product(&MomentQuery::product(&[(0, 0), (1, 0)]), &cov).unwrap();
            let pp = e.expect_product(&MomentQuery::product(&[(0, 1), (1, 1)]), &cov).unwrap();
            println!("  n={n:3}  <ss>={ss:.16}  <s's'>={pp:.16}");
        }
    }
}
