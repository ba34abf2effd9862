package p;

class C {
    private D d;

    int f() {
        return d.x + d.y;
    }
}
