package geo;

class Point {
    double x;
    double y;
    double ox;
    double oy;

    double distanceFrom(Route self) {
        double dx = this.x - this.ox;
        double dy = this.y - this.oy;
        return Math.sqrt(dx * dx + dy * dy) * self.scale;
    }
}
