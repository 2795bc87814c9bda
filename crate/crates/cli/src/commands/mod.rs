pub mod backtest;
pub mod regress;
pub mod solve;
