// header
class Tiny { int a; void f() { } /* trailing */ }
// footer
