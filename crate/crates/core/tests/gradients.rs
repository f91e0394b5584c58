//! Central finite differences against the tape, at f64.

mod common;

use common::gradcheck;

#[test]
fn elementwise_and_shape_ops() {
    let r = gradcheck::elementwise_and_shape_ops();
    assert!(r.checked > 0);
}

#[test]
fn matmul_and_dense() {
    let r = gradcheck::matmul_and_dense();
    assert!(r.checked > 0);
}

#[test]
fn conv2d_kernels() {
    let r = gradcheck::conv2d_kernels();
    assert!(r.checked > 0);
}

#[test]
fn conv_layer_with_many_samples_spans_groups() {
    let r = gradcheck::conv_layer_with_many_samples_spans_groups();
    assert!(r.checked > 0);
}

#[test]
fn batch_norm_train_and_eval() {
    let r = gradcheck::batch_norm_train_and_eval();
    assert!(r.checked > 0);
}

#[test]
fn mse_and_column_normalization() {
    let r = gradcheck::mse_and_column_normalization();
    assert!(r.checked > 0);
}

#[test]
fn full_autoencoder_without_quantizer() {
    let r = gradcheck::full_autoencoder_without_quantizer();
    assert!(r.checked > 0);
}
