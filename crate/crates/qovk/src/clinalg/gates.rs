//! Fixed gate matrices used by encoders, kernels and the circuit simulator.

use super::{ComplexMatrix, C64};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_entries(2, 2, vec![c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]).unwrap()
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_entries(2, 2, vec![c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]).unwrap()
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_entries(2, 2, vec![c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]).unwrap()
}

/// The single-qubit Pauli basis {I, X, Y, Z} in that order.
pub fn paulis() -> [ComplexMatrix; 4] {
    [ComplexMatrix::identity(2), pauli_x(), pauli_y(), pauli_z()]
}

pub fn hadamard() -> ComplexMatrix {
    let s = 1.0 / 2.0_f64.sqrt();
    ComplexMatrix::from_entries(2, 2, vec![c(s, 0.), c(s, 0.), c(s, 0.), c(-s, 0.)]).unwrap()
}

/// Rotation about the y axis by `theta`.
pub fn ry(theta: f64) -> ComplexMatrix {
    let (s, co) = ((theta / 2.0).sin(), (theta / 2.0).cos());
    ComplexMatrix::from_entries(2, 2, vec![c(co, 0.), c(-s, 0.), c(s, 0.), c(co, 0.)]).unwrap()
}

/// CNOT with the first qubit as control.
pub fn cnot() -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(4, 4);
    m.set(0, 0, c(1., 0.));
    m.set(1, 1, c(1., 0.));
    m.set(2, 3, c(1., 0.));
    m.set(3, 2, c(1., 0.));
    m
}

/// Exchange of two registers of dimension `dim` each.
pub fn swap_registers(dim: usize) -> ComplexMatrix {
    let side = dim * dim;
    let mut m = ComplexMatrix::zeros(side, side);
    for i in 0..dim {
        for j in 0..dim {
            m.set(i * dim + j, j * dim + i, c(1., 0.));
        }
    }
    m
}

/// Controlled swap of two `dim`-dimensional registers, control qubit first.
pub fn controlled_swap(dim: usize) -> ComplexMatrix {
    let side = dim * dim;
    let mut m = ComplexMatrix::zeros(2 * side, 2 * side);
    for i in 0..side {
        m.set(i, i, c(1., 0.));
    }
    let swap = swap_registers(dim);
    for i in 0..side {
        for j in 0..side {
            m.set(side + i, side + j, swap.get(i, j));
        }
    }
    m
}
