/// Forwards owned/mixed binary operators to the `&T op &T` implementation.
#[macro_export]
#[doc(hidden)]
macro_rules! forward_owned_binops {
    ($t:ty; $($tr:ident $m:ident),*) => {$(
        impl std::ops::$tr<$t> for $t {
            type Output = $t;
            fn $m(self, rhs: $t) -> $t { std::ops::$tr::$m(&self, &rhs) }
        }
        impl<'a> std::ops::$tr<&'a $t> for $t {
            type Output = $t;
            fn $m(self, rhs: &'a $t) -> $t { std::ops::$tr::$m(&self, rhs) }
        }
        impl<'a> std::ops::$tr<$t> for &'a $t {
            type Output = $t;
            fn $m(self, rhs: $t) -> $t { std::ops::$tr::$m(self, &rhs) }
        }
    )*};
}
