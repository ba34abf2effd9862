package hr;

public class Employee {
    double salary;
    double bonus;
    double tax;
}
