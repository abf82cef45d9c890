//! Compare backpropagation-through-time gradients with central finite
//! differences for every cell type.

use hds_fallcast::seqnet::{grad_check, CellKind};

fn main() -> hds_fallcast::Result<()> {
    for kind in CellKind::ALL {
        for (hidden, len) in [(2, 3), (8, 12)] {
            let r = grad_check(kind, hidden, len, 42)?;
            println!(
                "{kind:<4} hidden {hidden} length {len:>2}: {:>4} entries, max rel error {:.2e} at {}",
                r.checked, r.max_rel_error, r.worst
            );
        }
    }
    Ok(())
}
