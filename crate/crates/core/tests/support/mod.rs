pub mod set_props;
